#include "ssflow/census.hpp"

#include <algorithm>
#include <cmath>

#include "census_internal.hpp"
#include "ssflow/error.hpp"
#include "ssflow/simd/kernels.hpp"

namespace ssflow {

double charbonnier(double x, const CharbonnierParams& p) {
  return std::pow(x * x + p.epsilon * p.epsilon, p.gamma);
}

double charbonnier_derivative(double x, const CharbonnierParams& p) {
  return 2.0 * p.gamma * x * std::pow(x * x + p.epsilon * p.epsilon, p.gamma - 1.0);
}

std::vector<std::pair<int, int>> census_offsets(int patch) {
  require(patch >= 3 && patch % 2 == 1, "census: patch size must be odd and >= 3");
  const int r = patch / 2;
  std::vector<std::pair<int, int>> offsets;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx)
      if (dx != 0 || dy != 0) offsets.emplace_back(dx, dy);
  return offsets;
}

namespace detail {

PaddedPlane pad_clamped(const ImageGrid& img, int channel, int r) {
  PaddedPlane pad{img.height(), img.width(), r, {}};
  pad.data.resize(static_cast<std::size_t>(img.height() + 2 * r) * pad.stride());
  for (int y = -r; y < img.height() + r; ++y) {
    const int sy = std::clamp(y, 0, img.height() - 1);
    double* dst = pad.data.data() + static_cast<std::size_t>(y + r) * pad.stride();
    for (int x = -r; x < img.width() + r; ++x)
      dst[x + r] = img.at(sy, std::clamp(x, 0, img.width() - 1), channel);
  }
  return pad;
}

CensusDescriptorGrid census_from_padded(const PaddedPlane& pad, const CensusParams& p) {
  const auto offsets = census_offsets(p.patch);
  require(pad.r >= p.patch / 2, "census: padding smaller than patch radius");
  CensusDescriptorGrid out{pad.height, pad.width, p.patch, p.mode, {}};
  const std::size_t n = static_cast<std::size_t>(pad.height) * pad.width;
  out.planes.resize(offsets.size() * n);
  const auto& k = simd::kernels();
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    const auto [dx, dy] = offsets[i];
    for (int y = 0; y < pad.height; ++y) {
      double* dst = out.planes.data() + i * n + static_cast<std::size_t>(y) * pad.width;
      if (p.mode == CensusMode::Soft)
        k.census_soft(pad.row(y), pad.row(y + dy, dx), dst, pad.width, p.sigma2);
      else
        k.census_hard(pad.row(y), pad.row(y + dy, dx), dst, pad.width, p.tau);
    }
  }
  return out;
}

std::vector<double> soft_census_derivatives(const PaddedPlane& pad, int patch, double sigma2) {
  const auto offsets = census_offsets(patch);
  const std::size_t n = static_cast<std::size_t>(pad.height) * pad.width;
  std::vector<double> out(offsets.size() * n);
  const auto& k = simd::kernels();
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    const auto [dx, dy] = offsets[i];
    for (int y = 0; y < pad.height; ++y)
      k.census_soft_deriv(pad.row(y), pad.row(y + dy, dx),
                          out.data() + i * n + static_cast<std::size_t>(y) * pad.width,
                          pad.width, sigma2);
  }
  return out;
}

}  // namespace detail

CensusDescriptorGrid census_transform(const ImageGrid& img, const CensusParams& p) {
  require(img.channels() == 1, "census_transform: single-channel image required");
  require(!img.empty(), "census_transform: empty image");
  census_offsets(p.patch);  // validates the patch size
  if (p.mode == CensusMode::Soft) require(p.sigma2 > 0.0, "census_transform: sigma2 must be > 0");
  return detail::census_from_padded(detail::pad_clamped(img, 0, p.patch / 2), p);
}

ScalarField census_distance(const CensusDescriptorGrid& a, const CensusDescriptorGrid& b,
                            double soft_hamming_c) {
  require(a.height == b.height && a.width == b.width, "census_distance: dimension mismatch");
  require(a.patch == b.patch, "census_distance: patch size mismatch");
  require(a.mode == b.mode, "census_distance: mode mismatch");
  ScalarField out(a.height, a.width, 1);
  auto acc = out.data();
  const auto& k = simd::kernels();
  for (int i = 0; i < a.entries(); ++i) {
    if (a.mode == CensusMode::Soft)
      k.soft_hamming_acc(a.plane(i).data(), b.plane(i).data(), acc.data(), acc.size(),
                         soft_hamming_c);
    else
      k.hard_hamming_acc(a.plane(i).data(), b.plane(i).data(), acc.data(), acc.size());
  }
  return out;
}

PhotometricResult photometric_residual(const ImageGrid& source, const ImageGrid& target,
                                       const Grid& displacement, const CensusParams& census,
                                       const CharbonnierParams& rho) {
  require(source.same_shape(target), "photometric_residual: image shapes differ");
  require(source.same_dims(displacement), "photometric_residual: displacement shape differs");
  const WarpResult warped = warp(target, displacement);
  PhotometricResult out{ScalarField(source.height(), source.width()),
                        ScalarField(source.height(), source.width()), warped.valid};
  for (int c = 0; c < source.channels(); ++c) {
    const auto a = census_transform(source.channel(c), census);
    const auto b = census_transform(warped.image.channel(c), census);
    const ScalarField d = census_distance(a, b, census.soft_hamming_c);
    auto dst = out.distance.data();
    auto src = d.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
  for (int y = 0; y < source.height(); ++y)
    for (int x = 0; x < source.width(); ++x)
      out.residual.at(y, x) = out.valid.at(y, x) ? charbonnier(out.distance.at(y, x), rho) : 0.0;
  return out;
}

}  // namespace ssflow

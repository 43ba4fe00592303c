#include "simsel/distance.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "simsel/error.hpp"

namespace simsel {

namespace {

// Neumaier compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

void require_same_grid(const DensityField& a, const DensityField& b) {
  if (!(a.grid == b.grid)) {
    throw Error(ErrorCode::kGridMismatch, "density fields are on different grids");
  }
  if (a.values.size() != a.grid.size() || b.values.size() != b.grid.size()) {
    throw Error(ErrorCode::kGridMismatch,
                "density values do not match grid size");
  }
}

}  // namespace

std::size_t SupportMask::count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
}

SupportMask support_domain(const DensityField& gt, const DensityField& sim) {
  require_same_grid(gt, sim);
  SupportMask out{gt.grid, std::vector<std::uint8_t>(gt.values.size(), 0)};
  for (std::size_t i = 0; i < gt.values.size(); ++i) {
    out.mask[i] = (gt.values[i] > 0.0 && sim.values[i] > 0.0) ? 1 : 0;
  }
  return out;
}

double support_volume(const SupportMask& mask) {
  const auto& g = mask.grid;
  CompensatedSum radii;
  for (int j = 0; j < g.n_r; ++j) {
    for (int k = 0; k < g.n_z; ++k) {
      if (mask.mask[g.index(j, k)]) radii.add(g.radius(j));
    }
  }
  return 2.0 * std::numbers::pi * g.d_r * g.d_z * radii.value();
}

double density_distance(const DensityField& gt, const DensityField& sim,
                        NormKind norm) {
  const SupportMask mask = support_domain(gt, sim);
  const double volume = support_volume(mask);
  if (!(volume > 0.0)) {
    throw Error(ErrorCode::kEmptyOverlap,
                "density supports do not overlap (V+ = 0)");
  }
  const auto& g = gt.grid;
  const double weight = 2.0 * std::numbers::pi * g.d_r * g.d_z / volume;

  CompensatedSum acc;
  double max_abs = 0.0;
  for (int j = 0; j < g.n_r; ++j) {
    const double r = g.radius(j);
    for (int k = 0; k < g.n_z; ++k) {
      const std::size_t i = g.index(j, k);
      if (!mask.mask[i]) continue;
      const double diff = std::abs(gt.values[i] - sim.values[i]);
      switch (norm) {
        case NormKind::kL1:
          acc.add(diff * r);
          break;
        case NormKind::kL2:
          acc.add(diff * diff * r);
          break;
        case NormKind::kLInf:
          max_abs = std::max(max_abs, diff);
          break;
      }
    }
  }
  switch (norm) {
    case NormKind::kL1:
      return weight * acc.value();
    case NormKind::kL2:
      return std::sqrt(weight * acc.value());
    case NormKind::kLInf:
      return max_abs;
  }
  return 0.0;
}

double coefficient_distance(std::span<const double> a,
                            std::span<const double> b, NormKind norm) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "coefficient vectors differ in length (" +
                    std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()) + ")");
  }
  CompensatedSum acc;
  double max_abs = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::abs(a[i] - b[i]);
    if (norm == NormKind::kL1) acc.add(d);
    if (norm == NormKind::kL2) acc.add(d * d);
    max_abs = std::max(max_abs, d);
  }
  switch (norm) {
    case NormKind::kL1:
      return acc.value();
    case NormKind::kL2:
      return std::sqrt(acc.value());
    case NormKind::kLInf:
      return max_abs;
  }
  return 0.0;
}

FeatureDistance feature_distance(const FeatureSet& gt, const FeatureSet& sim,
                                 NormKind norm) {
  return {coefficient_distance(gt.shock_coeffs, sim.shock_coeffs, norm),
          coefficient_distance(gt.edge_coeffs, sim.edge_coeffs, norm)};
}

double combined_feature_distance(double delta_shock, double delta_edge,
                                 double w_shock, double w_edge) {
  auto in_range = [](double w) { return w >= 0.0 && w <= 1.0; };
  if (!in_range(w_shock) || !in_range(w_edge)) {
    throw Error(ErrorCode::kWeightOutOfRange,
                "feature weights must lie in [0, 1]");
  }
  return w_shock * delta_shock + w_edge * delta_edge;
}

std::vector<double> fourier_decompose(std::span<const double> samples,
                                      int n_modes) {
  if (n_modes < 1) {
    throw Error(ErrorCode::kTooFewSamples, "n_modes must be >= 1");
  }
  const std::size_t n = samples.size();
  if (n < 2 * static_cast<std::size_t>(n_modes)) {
    throw Error(ErrorCode::kTooFewSamples,
                std::to_string(n) + " samples cannot resolve " +
                    std::to_string(n_modes) + " coefficients");
  }
  for (double s : samples) {
    if (!std::isfinite(s)) {
      throw Error(ErrorCode::kValidation, "non-finite curve sample");
    }
  }
  std::vector<double> coeffs;
  coeffs.reserve(static_cast<std::size_t>(n_modes));

  CompensatedSum mean;
  for (double s : samples) mean.add(s);
  coeffs.push_back(mean.value() / static_cast<double>(n));

  const double step = 2.0 * std::numbers::pi / static_cast<double>(n);
  for (std::size_t k = 1; coeffs.size() < static_cast<std::size_t>(n_modes); ++k) {
    CompensatedSum c;
    CompensatedSum s;
    for (std::size_t i = 0; i < n; ++i) {
      // Reduce k*i mod n so the angle stays in [0, 2 pi).
      const double angle = step * static_cast<double>((k * i) % n);
      c.add(samples[i] * std::cos(angle));
      s.add(samples[i] * std::sin(angle));
    }
    coeffs.push_back(2.0 * c.value() / static_cast<double>(n));
    if (coeffs.size() < static_cast<std::size_t>(n_modes)) {
      coeffs.push_back(2.0 * s.value() / static_cast<double>(n));
    }
  }
  return coeffs;
}

std::vector<double> fourier_reconstruct(std::span<const double> coeffs,
                                        int n_theta) {
  std::vector<double> samples(static_cast<std::size_t>(std::max(n_theta, 0)));
  const std::size_t n = samples.size();
  if (n == 0 || coeffs.empty()) return samples;
  const double step = 2.0 * std::numbers::pi / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    double r = coeffs[0];
    for (std::size_t c = 1; c < coeffs.size(); ++c) {
      const std::size_t k = (c + 1) / 2;
      const double angle = step * static_cast<double>((k * i) % n);
      r += coeffs[c] * ((c % 2 == 1) ? std::cos(angle) : std::sin(angle));
    }
    samples[i] = r;
  }
  return samples;
}

}  // namespace simsel

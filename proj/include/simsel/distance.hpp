#pragma once

// Ground-truth distance metrics.
//
// Density distances are volume-weighted averages over the shared support D+
// (cells where both densities are nonzero) of a uniform cylindrical grid:
//
//   D1   = (2 pi dR dz / V+) * sum_{D+} |d rho| R_j
//   D2   = ((2 pi dR dz / V+) * sum_{D+} (d rho)^2 R_j)^(1/2)
//   Dinf = max_{D+} |d rho|
//
// with V+ = 2 pi dR dz sum_{D+} R_j the revolved volume of D+. Feature
// distances are plain vector norms in Fourier-coefficient space.

#include <cstdint>
#include <span>
#include <vector>

#include "simsel/core.hpp"

namespace simsel {

struct SupportMask {
  CylGrid grid;
  std::vector<std::uint8_t> mask;  // 1 where both densities are > 0

  std::size_t count() const;
};

SupportMask support_domain(const DensityField& gt, const DensityField& sim);

// Revolved volume of the masked cells (cm^3). Zero for an empty mask.
double support_volume(const SupportMask& mask);

// Throws kGridMismatch or kEmptyOverlap.
double density_distance(const DensityField& gt, const DensityField& sim,
                        NormKind norm);

struct FeatureDistance {
  double delta_shock = 0.0;
  double delta_edge = 0.0;
};

// p-norm of the coefficient-wise difference, p in {1, 2, inf}.
double coefficient_distance(std::span<const double> a,
                            std::span<const double> b, NormKind norm);

FeatureDistance feature_distance(const FeatureSet& gt, const FeatureSet& sim,
                                 NormKind norm);

// w_shock * delta_shock + w_edge * delta_edge; weights must lie in [0, 1].
double combined_feature_distance(double delta_shock, double delta_edge,
                                 double w_shock, double w_edge);

/// Discrete Fourier series of a closed curve r(theta_i), theta_i = 2 pi i / n.
///
/// Returns [a0, a1, b1, a2, b2, ...] truncated to n_modes entries, where a0
/// is the mean radius and a_k, b_k are the cosine and sine amplitudes of
/// mode k. Requires samples.size() >= 2 * n_modes (kTooFewSamples).
std::vector<double> fourier_decompose(std::span<const double> samples,
                                      int n_modes);

// Inverse of fourier_decompose: samples the series at n_theta uniform angles.
std::vector<double> fourier_reconstruct(std::span<const double> coeffs,
                                        int n_theta);

}  // namespace simsel

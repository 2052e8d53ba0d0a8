#pragma once

#include <cstdint>
#include <vector>

#include "funspec/hilbert.hpp"

namespace funspec {

class SpectralMeasure;

/// Lag-covariance operators C_0 ... C_{H_max}; negative lags are implied by
/// C_{-h} = adjoint(C_h) and never stored.
class LagCovSequence {
 public:
  LagCovSequence(GridPtr grid, std::vector<Op> ops);

  const GridPtr& grid() const { return grid_; }
  int max_lag() const { return static_cast<int>(ops_.size()) - 1; }
  /// C_h for |h| <= max_lag.
  Op at(int h) const;
  /// Orthonormal-coordinate matrix of C_h, including negative lags.
  Eigen::MatrixXcd coords(int h) const;
  const std::vector<Op>& stored() const { return ops_; }

 private:
  GridPtr grid_;
  std::vector<Op> ops_;
};

/// Biased (divide-by-T) estimator
///   C_h = (1/T) sum_{t=0}^{T-1-h} X_{t+h} (x) X_t,
/// optionally after subtracting the sample mean curve.
LagCovSequence empirical_lag_cov(const FuncSeries& series, int max_lag, bool demean = false);

struct NonNegDefReport {
  double min_quadratic_form = 0.0;
  double min_block_eigenvalue = 0.0;
  /// Largest |Im Q| / |Q| over all probes.
  double max_imag_ratio = 0.0;
};

/// Tests the kernel (i,j) -> C_{i-j} for non-negative definiteness at order n:
/// random probe tuples (g_1..g_n) and the smallest eigenvalue of the
/// nN x nN block Toeplitz Gram matrix.
NonNegDefReport check_nonneg_def(const LagCovSequence& lagcov, int n, int probes, std::uint64_t seed);

/// Assembles [C_{i-j}]_{i,j=0..n-1} in orthonormal coordinates.
Eigen::MatrixXcd block_toeplitz(const LagCovSequence& lagcov, int n);

struct IsometryPair {
  cplx lhs;
  cplx rhs;
};

/// Time-domain and frequency-domain evaluations of
/// <sum_i a_i X_{t_i}, sum_j b_j X_{t_j}>:
///   lhs = sum a_i conj(b_j) trace C_{t_i - t_j},
///   rhs = sum a_i conj(b_j) int e^{i w (t_i - t_j)} d mu_F(w).
IsometryPair isometry_gram(const LagCovSequence& lagcov, const SpectralMeasure& sm,
                           const std::vector<int>& times, const std::vector<cplx>& coeffs_a,
                           const std::vector<cplx>& coeffs_b);

}  // namespace funspec

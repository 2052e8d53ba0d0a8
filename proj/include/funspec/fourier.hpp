#pragma once

#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace funspec {

/// Uniform frequency grid on (-pi, pi] with the right-endpoint convention:
/// omega_k = -pi + 2 pi (k+1) / K, k = 0 ... K-1.
double grid_frequency(int k, int K);
std::vector<double> frequency_grid(int K);
/// Index k with omega_k within tol of omega (after wrapping into (-pi, pi]).
std::optional<int> grid_index(double omega, int K, double tol = 1e-9);
/// Index of the grid frequency closest to omega on the circle.
int nearest_grid_index(double omega, int K);
/// Index of the frequency -omega_k on the same grid.
inline int mirror_index(int k, int K) { return ((K - 2 - k) % K + K) % K; }

/// Wraps an angle into (-pi, pi].
double wrap_angle(double omega);

/// Exact-symmetry table of e^{2 pi i m / K}. Entries at m and K-m are exact
/// conjugates and quarter turns are exact, so phase products built from the
/// table are reproducible and periodic in integer arithmetic.
class PhaseTable {
 public:
  explicit PhaseTable(int K);
  int size() const { return static_cast<int>(table_.size()); }
  /// e^{2 pi i m / K} for any integer m.
  std::complex<double> operator()(long long m) const;
  /// e^{i h omega_k} for grid frequency omega_k.
  std::complex<double> at_grid(long long h, int k) const;

 private:
  std::vector<std::complex<double>> table_;
};

/// Column-wise DFT of a T x N matrix over its rows:
///   forward: out_j = sum_t in_t e^{-2 pi i j t / T}
///   inverse: out_t = sum_j in_j e^{+2 pi i j t / T}   (unscaled)
/// Columns are processed in parallel; results do not depend on thread count.
Eigen::MatrixXcd dft_rows(const Eigen::MatrixXcd& in, bool inverse);

}  // namespace funspec

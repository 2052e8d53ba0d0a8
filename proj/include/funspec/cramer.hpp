#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "funspec/covariance.hpp"
#include "funspec/hilbert.hpp"
#include "funspec/spectral.hpp"

namespace funspec {

/// Functional white noise with covariance sigma.
struct WhiteNoise {
  Op sigma;
};

/// X_t = sum_{j=0}^{J} theta_j eps_{t-j} with Cov(eps) = sigma.
struct LinearMA {
  Op sigma;
  std::vector<Op> theta;
};

/// Fractionally integrated white noise with memory parameter 0 < d < 1/2.
/// truncation bounds the time-domain MA(inf) expansion where one is needed.
struct LongMemory {
  Op sigma;
  double d = 0.0;
  int truncation = 1000;
};

/// Periodic component with random amplitude of covariance `amplitude`.
struct AtomSpec {
  double frequency;
  Op amplitude;
};

/// A continuous part (possibly absent) plus finitely many atoms.
///
/// With real_output set, atoms are given on [0, pi] and their mirrors at -w
/// (with conjugate amplitude) are added when the measure is assembled.
struct ModelSpec {
  GridPtr grid;
  std::variant<std::monostate, WhiteNoise, LinearMA, LongMemory> continuous;
  std::vector<AtomSpec> atoms;
  bool real_output = true;

  static ModelSpec white_noise(Op sigma, bool real_output = true);
  static ModelSpec linear_ma(Op sigma, std::vector<Op> theta, bool real_output = true);
  /// MA(1) with Theta_0 = I and Theta_1 = theta.
  static ModelSpec fma1(Op sigma, Op theta, bool real_output = true);
  static ModelSpec long_memory(Op sigma, double d, int truncation = 1000, bool real_output = true);
  static ModelSpec atoms_only(GridPtr grid, std::vector<AtomSpec> atoms, bool real_output = true);

  /// Throws DomainError on any violated invariant.
  void validate() const;
};

/// Density of the continuous part at omega (operator per radian); atoms
/// contribute nothing. Long memory at omega = 0 throws PoleError.
Op transfer_density(const ModelSpec& model, double omega);

/// psi_j = prod_{0<k<=j} (k-1+d)/k for j = 0..J.
std::vector<double> ma_coefficients_longmemory(double d, int J);

enum class PoleHandling {
  /// Replace the omega = 0 cell by the mean of its two neighbours.
  neighbor_mean,
  /// Zero the omega = 0 cell, dropping its mass.
  exclude,
};

/// Assembles the model's measure on the K-point grid (K even, K >= 16).
/// Long-memory models always have omega = 0 on such a grid; that cell is
/// handled per `pole` and recorded in flagged_cells().
SpectralMeasure model_spectral_measure(const ModelSpec& model, int K,
                                       PoleHandling pole = PoleHandling::neighbor_mean);

/// One realization of the orthogonal increments: dz row k holds Delta Z_k and
/// xi[l] the jump of atom l, both in orthonormal coordinates.
struct IncrementDraw {
  Eigen::MatrixXcd dz;
  std::vector<Eigen::VectorXcd> xi;
  std::uint64_t seed = 0;
};

/// Cramer synthesis from a fixed measure. Square roots of F_k dw and of the
/// jumps are factored once so repeated draws only cost matrix-vector
/// products and one FFT per grid coordinate.
class Synthesizer {
 public:
  Synthesizer(SpectralMeasure sm, bool real_output);

  const SpectralMeasure& measure() const { return sm_; }
  bool real_output() const { return real_; }

  IncrementDraw draw(std::uint64_t seed) const;
  /// X_t = sum_k e^{i t w_k} dZ_k + sum_l xi_l e^{i t w_l} for t < T, as a
  /// T x N matrix of orthonormal coordinates (imaginary parts kept).
  Eigen::MatrixXcd synthesize(const IncrementDraw& draw, int T) const;
  FuncSeries simulate(int T, std::uint64_t seed) const;

 private:
  SpectralMeasure sm_;
  bool real_;
  std::vector<Eigen::MatrixXcd> roots_;
  std::vector<Eigen::MatrixXcd> atom_roots_;
  std::vector<int> atom_index_;
  std::vector<int> atom_mirror_;
};

/// Default synthesis grid: 2 * next_pow2(T).
int default_synthesis_size(int T);

FuncSeries simulate(const SpectralMeasure& sm, int T, std::uint64_t seed, bool real_output);

/// C_h = herglotz_inverse(model_spectral_measure(model, K), h), h <= max_lag.
/// For linear MA models the closed form sum_j Theta_{j+h} Sigma Theta_j^*
/// is evaluated as well and the two must agree to 1e-8 relative.
LagCovSequence analytic_lag_cov(const ModelSpec& model, int max_lag, int K,
                                PoleHandling pole = PoleHandling::neighbor_mean);

/// Closed-form MA covariances sum_j Theta_{j+h} Sigma Theta_j^*.
LagCovSequence ma_lag_cov_closed_form(const LinearMA& ma, int max_lag);

}  // namespace funspec

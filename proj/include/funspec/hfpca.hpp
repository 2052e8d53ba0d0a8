#pragma once

#include <cstdint>
#include <vector>

#include "funspec/hilbert.hpp"
#include "funspec/spectral.hpp"

namespace funspec {

/// Per-frequency eigensystems of a spectral measure's density and of each
/// atom's jump operator.
struct FrequencyEigens {
  GridPtr grid;
  std::vector<EigenSystem> densities;  // one per grid frequency
  std::vector<EigenSystem> atoms;      // one per atom, same order as the measure
  std::vector<double> atom_frequencies;
  bool real_process = false;

  int num_freqs() const { return static_cast<int>(densities.size()); }
  double delta() const;
};

/// Truncation levels p_k per grid frequency and p_l per atom.
struct RankSchedule {
  std::vector<int> density_ranks;
  std::vector<int> atom_ranks;
};

/// Eigenvalues above 1e-10 times the leading one (zero for a null operator).
int numerical_rank(const EigenSystem& es);

FrequencyEigens eigendecompose_measure(const SpectralMeasure& sm);

/// Smallest p reaching variance fraction alpha at every frequency and atom,
/// rounded up to the end of a tied eigenvalue block; p = 0 where the trace
/// vanishes.
RankSchedule select_ranks(const FrequencyEigens& eig, double alpha);
/// p = min(fixed, numerical rank) everywhere.
RankSchedule fixed_ranks(const FrequencyEigens& eig, int fixed);

/// sum_k (sum_{j>p_k} nu_j) dw + sum_l sum_{j>p_l} nu_j.
///
/// The atom term is the real, time-independent sum of omitted jump
/// eigenvalues: that is what E||X_t - X*_t||^2 evaluates to for a periodic
/// component, whatever its phase.
double truncation_error(const FrequencyEigens& eig, const RankSchedule& ranks, double delta);

/// Orthonormal bases (N x p_j, orthonormal coordinates) of per-Fourier-bin
/// projections for a length-T series; bin j sits at 2 pi j / T.
struct FrequencyFilter {
  std::vector<Eigen::MatrixXcd> bases;
  int length() const { return static_cast<int>(bases.size()); }
};

/// Rank at each Fourier bin of a length-T series: the nearest grid
/// frequency's p_k, or an atom's p_l where an atom falls inside the bin.
std::vector<int> fourier_ranks(const FrequencyEigens& eig, const RankSchedule& ranks, int T);
/// Top-p eigenprojections resampled onto the Fourier bins of length T.
FrequencyFilter optimal_projection_filter(const FrequencyEigens& eig, const RankSchedule& ranks, int T);
/// Random rank-matched orthogonal projections (conjugate-paired across +-w
/// when `real` is set so real input stays real).
FrequencyFilter random_projection_filter(const std::vector<int>& ranks, int N, std::uint64_t seed,
                                         std::uint64_t index, bool real);
/// DFT over time, per-bin projection, inverse DFT.
FuncSeries apply_frequency_filter(const FuncSeries& series, const FrequencyFilter& filter);

/// The optimal rank-reduced process X*.
FuncSeries optimal_filter(const FuncSeries& series, const FrequencyEigens& eig, const RankSchedule& ranks);

/// (1/T) sum_t ||X_t - Y_t||^2.
double mean_squared_error(const FuncSeries& x, const FuncSeries& y);

struct NormBound {
  double lhs = 0.0;
  double rhs = 0.0;
};

/// lhs = E||X*_t||^2 = sum_k sum_{j<=p_k} nu_j dw + atom part;
/// rhs = max_k ||Pi_k||_inf^2 * mu_F((-pi, pi]).
NormBound filter_norm_bound_check(const FrequencyEigens& eig, const RankSchedule& ranks, const SpectralMeasure& sm);

struct FilterComparison {
  double optimal_error = 0.0;
  std::vector<double> competitor_errors;
};

/// Empirical errors of X* and of `competitors` random rank-matched
/// projection filters on the same series.
FilterComparison compare_filters(const FuncSeries& series, const FrequencyEigens& eig, const RankSchedule& ranks,
                                 int competitors, std::uint64_t seed);
/// Same, with caller-supplied competitor filters.
FilterComparison compare_filters(const FuncSeries& series, const FrequencyEigens& eig, const RankSchedule& ranks,
                                 const std::vector<FrequencyFilter>& competitors);

}  // namespace funspec

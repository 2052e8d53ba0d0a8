#include "funspec/hfpca.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "funspec/errors.hpp"
#include "funspec/fourier.hpp"
#include "funspec/parallel.hpp"
#include "funspec/random.hpp"

namespace funspec {

using std::numbers::pi;

namespace {

constexpr double kRankTol = 1e-10;
constexpr double kTieTol = 1e-10;

void require_shapes(const FrequencyEigens& eig, const RankSchedule& ranks, const char* where) {
  if (ranks.density_ranks.size() != eig.densities.size() || ranks.atom_ranks.size() != eig.atoms.size())
    throw DomainError(std::string(where) + ": rank schedule does not match the eigensystems");
  for (int p : ranks.density_ranks)
    if (p < 0) throw DomainError(std::string(where) + ": negative rank");
  for (int p : ranks.atom_ranks)
    if (p < 0) throw DomainError(std::string(where) + ": negative rank");
}

int rank_for_fraction(const EigenSystem& es, double alpha) {
  const int r = numerical_rank(es);
  if (r == 0) return 0;
  const auto& nu = es.eigenvalues;
  const double total = nu.head(r).sum();
  double cum = 0.0;
  int p = r;
  for (int j = 0; j < r; ++j) {
    cum += nu(j);
    if (cum >= alpha * total * (1.0 - 1e-14)) {
      p = j + 1;
      break;
    }
  }
  // Never split a block of tied eigenvalues.
  while (p < r && std::abs(nu(p - 1) - nu(p)) <= kTieTol * std::abs(nu(p - 1))) ++p;
  return p;
}

double omitted(const EigenSystem& es, int p) {
  const int r = numerical_rank(es);
  double s = 0.0;
  for (int j = p; j < r; ++j) s += std::max(es.eigenvalues(j), 0.0);
  return s;
}

double kept(const EigenSystem& es, int p) {
  const int r = std::min(numerical_rank(es), p);
  double s = 0.0;
  for (int j = 0; j < r; ++j) s += std::max(es.eigenvalues(j), 0.0);
  return s;
}

// Source of the projection used at Fourier bin j: atom index (>= 0) or
// density grid index encoded as -(k + 1).
int bin_source(const FrequencyEigens& eig, int j, int T) {
  const double w = wrap_angle(2.0 * pi * j / T);
  for (std::size_t l = 0; l < eig.atom_frequencies.size(); ++l)
    if (std::abs(wrap_angle(eig.atom_frequencies[l] - w)) < pi / T) return static_cast<int>(l);
  return -(nearest_grid_index(w, eig.num_freqs()) + 1);
}

}  // namespace

double FrequencyEigens::delta() const { return 2.0 * pi / num_freqs(); }

int numerical_rank(const EigenSystem& es) {
  if (es.size() == 0 || !(es.eigenvalues(0) > 0.0)) return 0;
  const double cut = kRankTol * es.eigenvalues(0);
  int r = 0;
  while (r < es.size() && es.eigenvalues(r) > cut) ++r;
  return r;
}

FrequencyEigens eigendecompose_measure(const SpectralMeasure& sm) {
  FrequencyEigens out;
  out.grid = sm.grid();
  out.real_process = sm.is_real_process();
  const int K = sm.num_freqs();
  out.densities.resize(static_cast<std::size_t>(K));
  parallel_for(0, K, [&](int k) { out.densities[static_cast<std::size_t>(k)] = eigh(sm.density(k)); });
  for (const auto& a : sm.atoms()) {
    out.atoms.push_back(eigh(a.jump));
    out.atom_frequencies.push_back(a.frequency);
  }
  return out;
}

RankSchedule select_ranks(const FrequencyEigens& eig, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("select_ranks: alpha must lie in (0, 1]");
  RankSchedule rs;
  rs.density_ranks.resize(eig.densities.size());
  parallel_for(0, eig.num_freqs(), [&](int k) {
    rs.density_ranks[static_cast<std::size_t>(k)] = rank_for_fraction(eig.densities[static_cast<std::size_t>(k)], alpha);
  });
  for (const auto& a : eig.atoms) rs.atom_ranks.push_back(rank_for_fraction(a, alpha));
  return rs;
}

RankSchedule fixed_ranks(const FrequencyEigens& eig, int fixed) {
  if (fixed < 0) throw DomainError("fixed_ranks: rank must be non-negative");
  RankSchedule rs;
  for (const auto& d : eig.densities) rs.density_ranks.push_back(std::min(fixed, numerical_rank(d)));
  for (const auto& a : eig.atoms) rs.atom_ranks.push_back(std::min(fixed, numerical_rank(a)));
  return rs;
}

double truncation_error(const FrequencyEigens& eig, const RankSchedule& ranks, double delta) {
  require_shapes(eig, ranks, "truncation_error");
  double dens = 0.0;
  for (std::size_t k = 0; k < eig.densities.size(); ++k) dens += omitted(eig.densities[k], ranks.density_ranks[k]);
  double jumps = 0.0;
  for (std::size_t l = 0; l < eig.atoms.size(); ++l) jumps += omitted(eig.atoms[l], ranks.atom_ranks[l]);
  return dens * delta + jumps;
}

std::vector<int> fourier_ranks(const FrequencyEigens& eig, const RankSchedule& ranks, int T) {
  require_shapes(eig, ranks, "fourier_ranks");
  std::vector<int> out(static_cast<std::size_t>(T));
  for (int j = 0; j < T; ++j) {
    const int src = bin_source(eig, j, T);
    out[static_cast<std::size_t>(j)] = src >= 0 ? ranks.atom_ranks[static_cast<std::size_t>(src)]
                                                : ranks.density_ranks[static_cast<std::size_t>(-src - 1)];
  }
  return out;
}

FrequencyFilter optimal_projection_filter(const FrequencyEigens& eig, const RankSchedule& ranks, int T) {
  require_shapes(eig, ranks, "optimal_projection_filter");
  if (T < 1) throw DomainError("optimal_projection_filter: T must be positive");
  FrequencyFilter f;
  f.bases.resize(static_cast<std::size_t>(T));
  for (int j = 0; j < T; ++j) {
    const int mirror = (T - j) % T;
    if (eig.real_process && mirror < j) {
      f.bases[static_cast<std::size_t>(j)] = f.bases[static_cast<std::size_t>(mirror)].conjugate();
      continue;
    }
    const int src = bin_source(eig, j, T);
    const EigenSystem& es = src >= 0 ? eig.atoms[static_cast<std::size_t>(src)]
                                     : eig.densities[static_cast<std::size_t>(-src - 1)];
    const int p = src >= 0 ? ranks.atom_ranks[static_cast<std::size_t>(src)]
                           : ranks.density_ranks[static_cast<std::size_t>(-src - 1)];
    f.bases[static_cast<std::size_t>(j)] = es.vectors.leftCols(std::min(p, es.size()));
  }
  return f;
}

FrequencyFilter random_projection_filter(const std::vector<int>& ranks, int N, std::uint64_t seed,
                                         std::uint64_t index, bool real) {
  const int T = static_cast<int>(ranks.size());
  FrequencyFilter f;
  f.bases.resize(ranks.size());
  for (int j = 0; j < T; ++j) {
    const int p = std::min(ranks[static_cast<std::size_t>(j)], N);
    const int mirror = (T - j) % T;
    if (real && mirror < j) {
      f.bases[static_cast<std::size_t>(j)] = f.bases[static_cast<std::size_t>(mirror)].conjugate();
      continue;
    }
    if (p <= 0) {
      f.bases[static_cast<std::size_t>(j)] = Eigen::MatrixXcd(N, 0);
      continue;
    }
    auto rng = stream_rng(seed, 0x5100 + index, static_cast<std::uint64_t>(j));
    Eigen::MatrixXcd g(N, p);
    if (real && mirror == j)
      for (int c = 0; c < p; ++c) g.col(c) = real_gaussian(rng, N);
    else
      g = complex_gaussian(rng, N, p);
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
    f.bases[static_cast<std::size_t>(j)] = qr.householderQ() * Eigen::MatrixXcd::Identity(N, p);
  }
  return f;
}

FuncSeries apply_frequency_filter(const FuncSeries& series, const FrequencyFilter& filter) {
  const int T = series.length();
  const int N = series.grid()->size();
  if (filter.length() != T) throw DomainError("apply_frequency_filter: filter length does not match series");
  for (const auto& b : filter.bases)
    if (b.rows() != N) throw DomainError("apply_frequency_filter: basis dimension does not match grid");

  Eigen::MatrixXcd d = dft_rows(series.coords(), false);
  parallel_for(0, T, [&](int j) {
    const auto& q = filter.bases[static_cast<std::size_t>(j)];
    const Eigen::VectorXcd v = d.row(j).transpose();
    d.row(j) = (q * (q.adjoint() * v)).transpose();
  });
  Eigen::MatrixXcd x = dft_rows(d, true) / static_cast<double>(T);
  return FuncSeries::from_coords(series.grid(), x, series.is_real());
}

FuncSeries optimal_filter(const FuncSeries& series, const FrequencyEigens& eig, const RankSchedule& ranks) {
  require_same_grid(series.grid(), eig.grid, "optimal_filter");
  return apply_frequency_filter(series, optimal_projection_filter(eig, ranks, series.length()));
}

double mean_squared_error(const FuncSeries& x, const FuncSeries& y) {
  require_same_grid(x.grid(), y.grid(), "mean_squared_error");
  if (x.length() != y.length()) throw DomainError("mean_squared_error: series lengths differ");
  if (x.length() == 0) return 0.0;
  return (x.coords() - y.coords()).squaredNorm() / x.length();
}

NormBound filter_norm_bound_check(const FrequencyEigens& eig, const RankSchedule& ranks, const SpectralMeasure& sm) {
  require_shapes(eig, ranks, "filter_norm_bound_check");
  if (sm.num_freqs() != eig.num_freqs() || sm.atoms().size() != eig.atoms.size())
    throw DomainError("filter_norm_bound_check: measure does not match the eigensystems");
  NormBound b;
  double dens = 0.0;
  bool any = false;
  for (std::size_t k = 0; k < eig.densities.size(); ++k) {
    dens += kept(eig.densities[k], ranks.density_ranks[k]);
    any = any || ranks.density_ranks[k] > 0;
  }
  double jumps = 0.0;
  for (std::size_t l = 0; l < eig.atoms.size(); ++l) {
    jumps += kept(eig.atoms[l], ranks.atom_ranks[l]);
    any = any || ranks.atom_ranks[l] > 0;
  }
  b.lhs = dens * eig.delta() + jumps;
  // Orthogonal projections have operator norm 1 unless they are zero.
  const double proj_norm_sq = any ? 1.0 : 0.0;
  b.rhs = proj_norm_sq * trace_measure(sm, -pi, pi);
  return b;
}

FilterComparison compare_filters(const FuncSeries& series, const FrequencyEigens& eig, const RankSchedule& ranks,
                                 const std::vector<FrequencyFilter>& competitors) {
  FilterComparison out;
  out.optimal_error = mean_squared_error(series, optimal_filter(series, eig, ranks));
  for (const auto& c : competitors)
    out.competitor_errors.push_back(mean_squared_error(series, apply_frequency_filter(series, c)));
  return out;
}

FilterComparison compare_filters(const FuncSeries& series, const FrequencyEigens& eig, const RankSchedule& ranks,
                                 int competitors, std::uint64_t seed) {
  if (competitors < 1) throw DomainError("compare_filters: need at least one competitor");
  const std::vector<int> bins = fourier_ranks(eig, ranks, series.length());
  std::vector<FrequencyFilter> filters;
  for (int c = 0; c < competitors; ++c)
    filters.push_back(random_projection_filter(bins, series.grid()->size(), seed, static_cast<std::uint64_t>(c),
                                               series.is_real()));
  return compare_filters(series, eig, ranks, filters);
}

}  // namespace funspec

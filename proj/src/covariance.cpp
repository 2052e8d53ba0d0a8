#include "funspec/covariance.hpp"

#include <cmath>
#include <random>

#include "funspec/errors.hpp"
#include "funspec/parallel.hpp"
#include "funspec/random.hpp"
#include "funspec/spectral.hpp"

namespace funspec {

LagCovSequence::LagCovSequence(GridPtr grid, std::vector<Op> ops) : grid_(std::move(grid)), ops_(std::move(ops)) {
  if (ops_.empty()) throw DomainError("LagCovSequence: C_0 is required");
  for (const auto& op : ops_) require_same_grid(grid_, op.grid(), "LagCovSequence");
  if (!ops_[0].is_hermitian()) throw DomainError("LagCovSequence: C_0 must be Hermitian");
}

Op LagCovSequence::at(int h) const {
  if (std::abs(h) > max_lag()) throw DomainError("LagCovSequence::at: lag out of range");
  return h >= 0 ? ops_[static_cast<std::size_t>(h)] : adjoint(ops_[static_cast<std::size_t>(-h)]);
}

Eigen::MatrixXcd LagCovSequence::coords(int h) const {
  if (std::abs(h) > max_lag()) throw DomainError("LagCovSequence::coords: lag out of range");
  return h >= 0 ? ops_[static_cast<std::size_t>(h)].coords()
                : Eigen::MatrixXcd(ops_[static_cast<std::size_t>(-h)].coords().adjoint());
}

LagCovSequence empirical_lag_cov(const FuncSeries& series, int max_lag, bool demean) {
  const int T = series.length();
  if (max_lag < 0 || max_lag >= T) throw DomainError("empirical_lag_cov: need 0 <= max_lag < T");
  Eigen::MatrixXcd x = series.coords();
  if (demean) x.rowwise() -= x.colwise().mean();

  std::vector<Op> ops(static_cast<std::size_t>(max_lag + 1), Op::zero(series.grid()));
  parallel_for(0, max_lag + 1, [&](int h) {
    const int len = T - h;
    // sum_t x_{t+h} x_t^H as an N x N product over the time axis.
    Eigen::MatrixXcd c = x.middleRows(h, len).transpose() * x.topRows(len).conjugate();
    c /= static_cast<double>(T);
    if (h == 0) {
      c = linalg::hermitian_part(c);
      ops[0] = Op::trusted_psd(series.grid(), std::move(c));
    } else {
      ops[static_cast<std::size_t>(h)] = Op::from_coords(series.grid(), std::move(c));
    }
  });
  return LagCovSequence(series.grid(), std::move(ops));
}

Eigen::MatrixXcd block_toeplitz(const LagCovSequence& lagcov, int n) {
  if (n < 1 || n > lagcov.max_lag() + 1) throw DomainError("block_toeplitz: need 1 <= n <= max_lag + 1");
  const int N = lagcov.grid()->size();
  Eigen::MatrixXcd g(n * N, n * N);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g.block(i * N, j * N, N, N) = lagcov.coords(i - j);
  return g;
}

NonNegDefReport check_nonneg_def(const LagCovSequence& lagcov, int n, int probes, std::uint64_t seed) {
  if (n < 1 || n > lagcov.max_lag() + 1) throw DomainError("check_nonneg_def: need 1 <= n <= max_lag + 1");
  if (probes < 0) throw DomainError("check_nonneg_def: probes must be non-negative");
  const int N = lagcov.grid()->size();
  const Eigen::MatrixXcd gram = block_toeplitz(lagcov, n);

  NonNegDefReport rep;
  rep.min_quadratic_form = std::numeric_limits<double>::infinity();
  auto rng = stream_rng(seed, 0x9e01, 0);
  for (int p = 0; p < probes; ++p) {
    const Eigen::VectorXcd g = complex_gaussian(rng, n * N);
    // sum_{i,j} <C_{i-j} g_j, g_i> = g^H G g in orthonormal coordinates.
    const cplx q = g.dot(gram * g);
    rep.min_quadratic_form = std::min(rep.min_quadratic_form, q.real());
    const double mag = std::abs(q);
    if (mag > 0.0) rep.max_imag_ratio = std::max(rep.max_imag_ratio, std::abs(q.imag()) / mag);
  }
  if (probes == 0) rep.min_quadratic_form = 0.0;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(linalg::hermitian_part(gram), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericError("check_nonneg_def: eigensolver failed");
  rep.min_block_eigenvalue = es.eigenvalues().minCoeff();
  return rep;
}

IsometryPair isometry_gram(const LagCovSequence& lagcov, const SpectralMeasure& sm, const std::vector<int>& times,
                           const std::vector<cplx>& coeffs_a, const std::vector<cplx>& coeffs_b) {
  if (times.size() != coeffs_a.size() || times.size() != coeffs_b.size())
    throw DomainError("isometry_gram: times and coefficients differ in length");
  require_same_grid(lagcov.grid(), sm.grid(), "isometry_gram");
  IsometryPair out{0.0, 0.0};
  for (std::size_t i = 0; i < times.size(); ++i) {
    for (std::size_t j = 0; j < times.size(); ++j) {
      const int h = times[i] - times[j];
      if (std::abs(h) > lagcov.max_lag()) throw DomainError("isometry_gram: lag out of range");
      const cplx w = coeffs_a[i] * std::conj(coeffs_b[j]);
      out.lhs += w * lagcov.coords(h).trace();
      out.rhs += w * sm.trace_fourier(h);
    }
  }
  return out;
}

}  // namespace funspec

#include "funspec/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <unsupported/Eigen/FFT>

#include "funspec/errors.hpp"
#include "funspec/fourier.hpp"
#include "funspec/parallel.hpp"

namespace funspec {

using std::numbers::pi;

namespace {

constexpr double kSymmetryTol = 1e-10;

double max_abs(const Eigen::MatrixXcd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

cplx atom_phase(double omega, long long h, int K, const PhaseTable& table) {
  if (auto k = grid_index(omega, K, 1e-12)) return table.at_grid(h, *k);
  return std::polar(1.0, static_cast<double>(h) * omega);
}

}  // namespace

// ---------------------------------------------------------------------------
// SpectralMeasure

SpectralMeasure::SpectralMeasure(GridPtr grid, std::vector<Op> densities, std::vector<Atom> atoms,
                                 bool real_process, std::vector<int> flagged_cells)
    : grid_(std::move(grid)),
      densities_(std::move(densities)),
      atoms_(std::move(atoms)),
      real_(real_process),
      flagged_(std::move(flagged_cells)) {
  if (densities_.empty()) throw DomainError("SpectralMeasure: at least one frequency required");
  const int K = num_freqs();
  for (auto& d : densities_) {
    require_same_grid(grid_, d.grid(), "SpectralMeasure");
    if (!d.is_psd() && !d.certify_psd()) throw DomainError("SpectralMeasure: density is not PSD");
  }
  for (std::size_t l = 0; l < atoms_.size(); ++l) {
    auto& a = atoms_[l];
    require_same_grid(grid_, a.jump.grid(), "SpectralMeasure");
    if (!(a.frequency > -pi && a.frequency <= pi)) throw DomainError("SpectralMeasure: atom frequency outside (-pi, pi]");
    if (l > 0 && !(a.frequency > atoms_[l - 1].frequency))
      throw DomainError("SpectralMeasure: atom frequencies must be distinct and sorted");
    if (!a.jump.is_psd() && !a.jump.certify_psd()) throw DomainError("SpectralMeasure: atom jump is not PSD");
  }
  for (int k : flagged_) {
    if (k < 0 || k >= K) throw DomainError("SpectralMeasure: flagged cell out of range");
  }
  if (!std::isfinite(total_mass())) throw DomainError("SpectralMeasure: total mass is not finite");

  if (real_) {
    for (int k = 0; k < K; ++k) {
      const int j = mirror_index(k, K);
      if (j < k) continue;
      const auto& a = densities_[static_cast<std::size_t>(k)].coords();
      const auto& b = densities_[static_cast<std::size_t>(j)].coords();
      const double scale = std::max({max_abs(a), max_abs(b), 1e-300});
      if (max_abs(b - a.conjugate()) > kSymmetryTol * scale)
        throw DomainError("SpectralMeasure: density is not symmetric for a real process");
    }
    for (const auto& a : atoms_) {
      const double mirror = (a.frequency == pi) ? pi : -a.frequency;
      auto it = std::find_if(atoms_.begin(), atoms_.end(),
                             [&](const Atom& b) { return std::abs(b.frequency - mirror) <= 1e-12; });
      if (it == atoms_.end()) throw DomainError("SpectralMeasure: real process atoms must come in +-w pairs");
      const double scale = std::max({max_abs(a.jump.coords()), 1e-300});
      if (max_abs(it->jump.coords() - a.jump.coords().conjugate()) > kSymmetryTol * scale)
        throw DomainError("SpectralMeasure: paired atom jumps must be conjugate");
    }
  }
}

double SpectralMeasure::frequency(int k) const { return grid_frequency(k, num_freqs()); }

double SpectralMeasure::delta() const { return 2.0 * pi / num_freqs(); }

double SpectralMeasure::total_mass() const {
  double dens = 0.0;
  for (const auto& d : densities_) dens += d.trace().real();
  double jumps = 0.0;
  for (const auto& a : atoms_) jumps += a.jump.trace().real();
  return dens * delta() + jumps;
}

cplx SpectralMeasure::trace_fourier(int h) const {
  const int K = num_freqs();
  const PhaseTable table(K);
  cplx acc = 0.0;
  for (int k = 0; k < K; ++k) acc += table.at_grid(h, k) * densities_[static_cast<std::size_t>(k)].trace();
  acc *= delta();
  for (const auto& a : atoms_) acc += atom_phase(a.frequency, h, K, table) * a.jump.trace();
  return acc;
}

// ---------------------------------------------------------------------------
// Windows

Window parse_window(std::string_view name) {
  if (name == "fejer") return Window::fejer;
  if (name == "bartlett") return Window::bartlett;
  if (name == "parzen") return Window::parzen;
  throw DomainError("unknown window '" + std::string(name) + "'");
}

std::string_view to_string(Window w) {
  switch (w) {
    case Window::fejer: return "fejer";
    case Window::bartlett: return "bartlett";
    case Window::parzen: return "parzen";
  }
  return "fejer";
}

double lag_window(Window w, int h, int q) {
  const int a = std::abs(h);
  if (a > q) return 0.0;
  if (a == 0) return 1.0;
  switch (w) {
    case Window::fejer: return 1.0 - static_cast<double>(a) / (q + 1);
    case Window::bartlett: return 1.0 - static_cast<double>(a) / q;
    case Window::parzen: {
      const double u = static_cast<double>(a) / q;
      if (u <= 0.5) return 1.0 - 6.0 * u * u + 6.0 * u * u * u;
      const double r = 1.0 - u;
      return 2.0 * r * r * r;
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Herglotz transforms

SpectralMeasure herglotz_forward(const LagCovSequence& lagcov, int K, int q, Window window) {
  if (q < 0 || q > lagcov.max_lag()) throw DomainError("herglotz_forward: bandwidth exceeds max_lag");
  if (K < 2 * q + 2) throw DomainError("herglotz_forward: K too small for bandwidth (aliasing)");
  const int N = lagcov.grid()->size();

  // Lags folded onto residues mod K with the e^{i pi h} shift that moves the
  // DFT index j = k + 1 onto omega_k.
  std::vector<Eigen::MatrixXcd> weighted(static_cast<std::size_t>(2 * q + 1));
  for (int h = -q; h <= q; ++h) {
    const double sign = (h % 2 == 0) ? 1.0 : -1.0;
    weighted[static_cast<std::size_t>(h + q)] = (sign * lag_window(window, h, q)) * lagcov.coords(h);
  }

  std::vector<Eigen::MatrixXcd> dens(static_cast<std::size_t>(K), Eigen::MatrixXcd(N, N));
  parallel_for(0, N, [&](int a) {
    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::Unscaled);
    std::vector<cplx> src(static_cast<std::size_t>(K)), dst;
    for (int b = 0; b < N; ++b) {
      std::fill(src.begin(), src.end(), cplx(0.0));
      for (int h = -q; h <= q; ++h) src[static_cast<std::size_t>((h % K + K) % K)] = weighted[static_cast<std::size_t>(h + q)](a, b);
      fft.fwd(dst, src);
      for (int k = 0; k < K; ++k) dens[static_cast<std::size_t>(k)](a, b) = dst[static_cast<std::size_t>((k + 1) % K)] / (2.0 * pi);
    }
  });

  std::vector<Op> ops(static_cast<std::size_t>(K), Op::zero(lagcov.grid()));
  parallel_for(0, K, [&](int k) {
    ops[static_cast<std::size_t>(k)] = Op::trusted_psd(lagcov.grid(), linalg::psd_project(dens[static_cast<std::size_t>(k)]));
  });

  bool real_input = true;
  for (const auto& op : lagcov.stored()) real_input = real_input && op.coords().imag().cwiseAbs().maxCoeff() == 0.0;
  if (real_input) {
    // Real covariances give conj-symmetric densities up to FFT round-off;
    // pin the pairing so the measure validates as a real process.
    for (int k = 0; k < K; ++k) {
      const int j = mirror_index(k, K);
      if (j < k) continue;
      if (j == k) {
        ops[static_cast<std::size_t>(k)] = Op::trusted_psd(lagcov.grid(), ops[static_cast<std::size_t>(k)].coords().real().cast<cplx>());
      } else {
        ops[static_cast<std::size_t>(j)] = Op::trusted_psd(lagcov.grid(), ops[static_cast<std::size_t>(k)].coords().conjugate());
      }
    }
  }
  return SpectralMeasure(lagcov.grid(), std::move(ops), {}, real_input);
}

Op herglotz_inverse(const SpectralMeasure& sm, int h) {
  const int K = sm.num_freqs();
  if (2 * std::abs(h) > K) throw DomainError("herglotz_inverse: |h| exceeds K/2");
  const int N = sm.grid()->size();
  const PhaseTable table(K);
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(N, N);
  for (int k = 0; k < K; ++k) acc += table.at_grid(h, k) * sm.density(k).coords();
  acc *= sm.delta();
  for (const auto& a : sm.atoms()) acc += atom_phase(a.frequency, h, K, table) * a.jump.coords();
  if (h == 0) return Op::trusted_psd(sm.grid(), linalg::hermitian_part(acc));
  return Op::from_coords(sm.grid(), std::move(acc));
}

LagCovSequence herglotz_inverse_sequence(const SpectralMeasure& sm, int max_lag) {
  if (max_lag < 0) throw DomainError("herglotz_inverse_sequence: max_lag must be non-negative");
  std::vector<Op> ops(static_cast<std::size_t>(max_lag + 1), Op::zero(sm.grid()));
  parallel_for(0, max_lag + 1, [&](int h) { ops[static_cast<std::size_t>(h)] = herglotz_inverse(sm, h); });
  return LagCovSequence(sm.grid(), std::move(ops));
}

double trace_measure(const SpectralMeasure& sm, double a, double b) {
  if (a > b) throw DomainError("trace_measure: a > b");
  if (a < -pi || b > pi) throw DomainError("trace_measure: interval outside [-pi, pi]");
  double dens = 0.0;
  for (int k = 0; k < sm.num_freqs(); ++k) {
    const double w = sm.frequency(k);
    if (w > a && w <= b) dens += sm.density(k).trace().real();
  }
  double jumps = 0.0;
  for (const auto& at : sm.atoms())
    if (at.frequency > a && at.frequency <= b) jumps += at.jump.trace().real();
  return dens * sm.delta() + jumps;
}

// ---------------------------------------------------------------------------
// Atom detection

std::vector<SpectralMeasure::Atom> detect_atoms(const FuncSeries& series, double alpha, int m) {
  const int T = series.length();
  if (T < 64) throw DomainError("detect_atoms: series too short (T < 64)");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("detect_atoms: alpha must lie in (0, 1)");
  if (m < 1 || 2 * m >= T) throw DomainError("detect_atoms: neighbourhood size out of range");

  const Eigen::MatrixXcd dft = dft_rows(series.coords(), false);
  std::vector<double> power(static_cast<std::size_t>(T));
  for (int j = 0; j < T; ++j) power[static_cast<std::size_t>(j)] = dft.row(j).squaredNorm() / T;

  const double factor = -std::log(2.0 * alpha / T) / std::numbers::ln2;
  std::vector<SpectralMeasure::Atom> atoms;
  std::vector<double> nb(static_cast<std::size_t>(2 * m));
  for (int j = 0; j < T; ++j) {
    for (int i = 1; i <= m; ++i) {
      nb[static_cast<std::size_t>(2 * (i - 1))] = power[static_cast<std::size_t>((j - i + T) % T)];
      nb[static_cast<std::size_t>(2 * (i - 1) + 1)] = power[static_cast<std::size_t>((j + i) % T)];
    }
    // Lower median of the even-sized neighbour set.
    auto mid = nb.begin() + (m - 1);
    std::nth_element(nb.begin(), mid, nb.end());
    const double med = *mid;
    if (power[static_cast<std::size_t>(j)] > factor * med && power[static_cast<std::size_t>(j)] > 0.0) {
      const Eigen::VectorXcd d = dft.row(j).transpose();
      Eigen::MatrixXcd jump = d * d.adjoint() / (static_cast<double>(T) * T);
      atoms.push_back({wrap_angle(2.0 * pi * j / T), Op::trusted_psd(series.grid(), std::move(jump))});
    }
  }
  std::sort(atoms.begin(), atoms.end(), [](const auto& x, const auto& y) { return x.frequency < y.frequency; });
  return atoms;
}

}  // namespace funspec

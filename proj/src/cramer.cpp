#include "funspec/cramer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>

#include "funspec/errors.hpp"
#include "funspec/fourier.hpp"
#include "funspec/parallel.hpp"
#include "funspec/random.hpp"

namespace funspec {

using std::numbers::pi;

namespace {

bool is_real_matrix(const Eigen::MatrixXcd& m) { return m.imag().cwiseAbs().maxCoeff() == 0.0; }

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

const Op* continuous_sigma(const ModelSpec& m) {
  return std::visit(overloaded{[](const std::monostate&) -> const Op* { return nullptr; },
                               [](const WhiteNoise& w) -> const Op* { return &w.sigma; },
                               [](const LinearMA& w) -> const Op* { return &w.sigma; },
                               [](const LongMemory& w) -> const Op* { return &w.sigma; }},
                    m.continuous);
}

void require_psd(const Op& op, const char* what) {
  Op copy = op;
  if (!copy.is_psd() && !copy.certify_psd()) throw DomainError(std::string(what) + " must be PSD");
}

Eigen::MatrixXcd density_coords(const ModelSpec& model, double omega) {
  const int N = model.grid->size();
  return std::visit(
      overloaded{
          [&](const std::monostate&) -> Eigen::MatrixXcd { return Eigen::MatrixXcd::Zero(N, N); },
          [&](const WhiteNoise& w) -> Eigen::MatrixXcd { return w.sigma.coords() / (2.0 * pi); },
          [&](const LinearMA& w) -> Eigen::MatrixXcd {
            Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(N, N);
            for (std::size_t j = 0; j < w.theta.size(); ++j)
              a += std::polar(1.0, -static_cast<double>(j) * omega) * w.theta[j].coords();
            return a * w.sigma.coords() * a.adjoint() / (2.0 * pi);
          },
          [&](const LongMemory& w) -> Eigen::MatrixXcd {
            const double s = 2.0 * std::abs(std::sin(0.5 * omega));
            if (s == 0.0) throw PoleError("transfer_density: long-memory density has a pole at omega = 0");
            return std::pow(s, -2.0 * w.d) * w.sigma.coords() / (2.0 * pi);
          }},
      model.continuous);
}

}  // namespace

// ---------------------------------------------------------------------------
// ModelSpec

ModelSpec ModelSpec::white_noise(Op sigma, bool real_output) {
  ModelSpec m;
  m.grid = sigma.grid();
  m.continuous = WhiteNoise{std::move(sigma)};
  m.real_output = real_output;
  m.validate();
  return m;
}

ModelSpec ModelSpec::linear_ma(Op sigma, std::vector<Op> theta, bool real_output) {
  ModelSpec m;
  m.grid = sigma.grid();
  m.continuous = LinearMA{std::move(sigma), std::move(theta)};
  m.real_output = real_output;
  m.validate();
  return m;
}

ModelSpec ModelSpec::fma1(Op sigma, Op theta, bool real_output) {
  auto grid = sigma.grid();
  return linear_ma(std::move(sigma), {Op::identity(grid), std::move(theta)}, real_output);
}

ModelSpec ModelSpec::long_memory(Op sigma, double d, int truncation, bool real_output) {
  ModelSpec m;
  m.grid = sigma.grid();
  m.continuous = LongMemory{std::move(sigma), d, truncation};
  m.real_output = real_output;
  m.validate();
  return m;
}

ModelSpec ModelSpec::atoms_only(GridPtr grid, std::vector<AtomSpec> atoms, bool real_output) {
  ModelSpec m;
  m.grid = std::move(grid);
  m.atoms = std::move(atoms);
  m.real_output = real_output;
  m.validate();
  return m;
}

void ModelSpec::validate() const {
  if (!grid) throw DomainError("ModelSpec: missing grid");
  if (const Op* s = continuous_sigma(*this)) {
    require_same_grid(grid, s->grid(), "ModelSpec");
    require_psd(*s, "ModelSpec: sigma");
    if (real_output && !is_real_matrix(s->coords())) throw DomainError("ModelSpec: real output needs a real sigma");
  }
  if (const auto* ma = std::get_if<LinearMA>(&continuous)) {
    if (ma->theta.empty()) throw DomainError("ModelSpec: linear_ma needs at least one coefficient");
    for (const auto& t : ma->theta) {
      require_same_grid(grid, t.grid(), "ModelSpec");
      if (real_output && !is_real_matrix(t.coords())) throw DomainError("ModelSpec: real output needs real MA coefficients");
    }
  }
  if (const auto* lm = std::get_if<LongMemory>(&continuous)) {
    if (!(lm->d > 0.0 && lm->d < 0.5)) throw DomainError("ModelSpec: long-memory d must lie in (0, 0.5)");
    if (lm->truncation < 0) throw DomainError("ModelSpec: truncation must be non-negative");
  }
  for (const auto& a : atoms) {
    require_same_grid(grid, a.amplitude.grid(), "ModelSpec");
    require_psd(a.amplitude, "ModelSpec: atom amplitude");
    if (real_output) {
      if (!(a.frequency >= 0.0 && a.frequency <= pi))
        throw DomainError("ModelSpec: with real output, atoms are given on [0, pi]");
      if ((a.frequency == 0.0 || a.frequency == pi) && !is_real_matrix(a.amplitude.coords()))
        throw DomainError("ModelSpec: atoms at 0 or pi need a real amplitude for real output");
    } else if (!(a.frequency > -pi && a.frequency <= pi)) {
      throw DomainError("ModelSpec: atom frequency outside (-pi, pi]");
    }
  }
}

// ---------------------------------------------------------------------------
// Densities and coefficients

Op transfer_density(const ModelSpec& model, double omega) {
  if (!(omega > -pi && omega <= pi)) throw DomainError("transfer_density: omega outside (-pi, pi]");
  return Op::trusted_psd(model.grid, linalg::hermitian_part(density_coords(model, omega)));
}

std::vector<double> ma_coefficients_longmemory(double d, int J) {
  if (!(d > 0.0 && d < 0.5)) throw DomainError("ma_coefficients_longmemory: d must lie in (0, 0.5)");
  if (J < 0) throw DomainError("ma_coefficients_longmemory: J must be non-negative");
  std::vector<double> psi(static_cast<std::size_t>(J + 1));
  psi[0] = 1.0;
  for (int j = 1; j <= J; ++j) psi[static_cast<std::size_t>(j)] = psi[static_cast<std::size_t>(j - 1)] * (j - 1 + d) / j;
  return psi;
}

SpectralMeasure model_spectral_measure(const ModelSpec& model, int K, PoleHandling pole) {
  model.validate();
  if (K < 16 || K % 2 != 0) throw DomainError("model_spectral_measure: K must be even and >= 16");
  const bool long_mem = std::holds_alternative<LongMemory>(model.continuous);
  const int zero_cell = K / 2 - 1;

  std::vector<Eigen::MatrixXcd> dens(static_cast<std::size_t>(K));
  parallel_for(0, K, [&](int k) {
    if (long_mem && k == zero_cell) return;
    dens[static_cast<std::size_t>(k)] = linalg::hermitian_part(density_coords(model, grid_frequency(k, K)));
  });

  std::vector<int> flagged;
  if (long_mem) {
    const auto n = static_cast<Eigen::Index>(model.grid->size());
    if (pole == PoleHandling::neighbor_mean)
      dens[static_cast<std::size_t>(zero_cell)] =
          0.5 * (dens[static_cast<std::size_t>(zero_cell - 1)] + dens[static_cast<std::size_t>(zero_cell + 1)]);
    else
      dens[static_cast<std::size_t>(zero_cell)] = Eigen::MatrixXcd::Zero(n, n);
    flagged.push_back(zero_cell);
  }

  if (model.real_output) {
    for (int k = 0; k < K; ++k) {
      const int j = mirror_index(k, K);
      if (j < k) continue;
      if (j == k)
        dens[static_cast<std::size_t>(k)] = dens[static_cast<std::size_t>(k)].real().cast<cplx>();
      else
        dens[static_cast<std::size_t>(j)] = dens[static_cast<std::size_t>(k)].conjugate();
    }
  }

  std::vector<Op> ops;
  ops.reserve(static_cast<std::size_t>(K));
  for (auto& d : dens) ops.push_back(Op::trusted_psd(model.grid, std::move(d)));

  std::vector<SpectralMeasure::Atom> atoms;
  auto snap = [&](double w) {
    auto k = grid_index(w, K);
    if (!k) throw DomainError("model_spectral_measure: atom frequency is not on the synthesis grid");
    return grid_frequency(*k, K);
  };
  for (const auto& a : model.atoms) {
    const double w = snap(a.frequency);
    atoms.push_back({w, a.amplitude});
    if (model.real_output && w != 0.0 && w != pi)
      atoms.push_back({grid_frequency(mirror_index(*grid_index(w, K), K), K),
                       Op::trusted_psd(model.grid, a.amplitude.coords().conjugate())});
  }
  std::sort(atoms.begin(), atoms.end(), [](const auto& x, const auto& y) { return x.frequency < y.frequency; });
  for (std::size_t l = 1; l < atoms.size(); ++l)
    if (atoms[l].frequency == atoms[l - 1].frequency)
      throw DomainError("model_spectral_measure: duplicate atom frequency");

  return SpectralMeasure(model.grid, std::move(ops), std::move(atoms), model.real_output, std::move(flagged));
}

// ---------------------------------------------------------------------------
// Synthesis

int default_synthesis_size(int T) {
  int p = 1;
  while (p < T) p <<= 1;
  return std::max(16, 2 * p);
}

Synthesizer::Synthesizer(SpectralMeasure sm, bool real_output) : sm_(std::move(sm)), real_(real_output) {
  if (real_ && !sm_.is_real_process())
    throw DomainError("simulate: real output requested for a measure without Hermitian symmetry");
  const int K = sm_.num_freqs();
  const double dw = sm_.delta();
  roots_.resize(static_cast<std::size_t>(K));
  parallel_for(0, K, [&](int k) {
    if (real_ && mirror_index(k, K) < k) return;  // taken from the mirror draw
    roots_[static_cast<std::size_t>(k)] = linalg::psd_sqrt(sm_.density(k).coords() * dw);
  });

  const auto& atoms = sm_.atoms();
  atom_roots_.resize(atoms.size());
  atom_index_.assign(atoms.size(), -1);
  atom_mirror_.assign(atoms.size(), -1);
  for (std::size_t l = 0; l < atoms.size(); ++l) {
    atom_roots_[l] = linalg::psd_sqrt(atoms[l].jump.coords());
    if (auto k = grid_index(atoms[l].frequency, K, 1e-12)) atom_index_[l] = *k;
  }
  if (real_) {
    for (std::size_t l = 0; l < atoms.size(); ++l) {
      const double w = atoms[l].frequency;
      const double mirror = (w == pi) ? pi : -w;
      for (std::size_t r = 0; r < atoms.size(); ++r)
        if (std::abs(atoms[r].frequency - mirror) <= 1e-12) atom_mirror_[l] = static_cast<int>(r);
    }
  }
}

IncrementDraw Synthesizer::draw(std::uint64_t seed) const {
  const int K = sm_.num_freqs();
  const int N = sm_.grid()->size();
  IncrementDraw out;
  out.seed = seed;
  out.dz.resize(K, N);
  parallel_for(0, K, [&](int k) {
    const int j = mirror_index(k, K);
    if (real_ && j < k) return;
    auto rng = stream_rng(seed, 1, static_cast<std::uint64_t>(k));
    const auto& root = roots_[static_cast<std::size_t>(k)];
    if (real_ && j == k) {
      out.dz.row(k) = (root.real().cast<cplx>() * real_gaussian(rng, N)).transpose();
    } else {
      out.dz.row(k) = (root * complex_gaussian(rng, N)).transpose();
      if (real_) out.dz.row(j) = out.dz.row(k).conjugate();
    }
  });

  const auto& atoms = sm_.atoms();
  out.xi.resize(atoms.size());
  for (std::size_t l = 0; l < atoms.size(); ++l) {
    const int mir = atom_mirror_[l];
    if (real_ && mir >= 0 && static_cast<std::size_t>(mir) < l) continue;
    auto rng = stream_rng(seed, 2, l);
    if (real_ && static_cast<std::size_t>(mir) == l) {
      out.xi[l] = atom_roots_[l].real().cast<cplx>() * real_gaussian(rng, N);
    } else {
      out.xi[l] = atom_roots_[l] * complex_gaussian(rng, N);
      if (real_ && mir >= 0) out.xi[static_cast<std::size_t>(mir)] = out.xi[l].conjugate();
    }
  }
  return out;
}

Eigen::MatrixXcd Synthesizer::synthesize(const IncrementDraw& draw, int T) const {
  const int K = sm_.num_freqs();
  const int N = sm_.grid()->size();
  if (draw.dz.rows() != K || draw.dz.cols() != N) throw DomainError("synthesize: draw does not match measure");

  // e^{i t w_k} = (-1)^t e^{2 pi i t (k+1) / K}: shift rows by one and take
  // an unscaled inverse DFT.
  Eigen::MatrixXcd shifted(K, N);
  for (int k = 0; k < K; ++k) shifted.row((k + 1) % K) = draw.dz.row(k);
  const bool has_density = draw.dz.cwiseAbs().maxCoeff() > 0.0;
  const Eigen::MatrixXcd y = has_density ? dft_rows(shifted, true) : Eigen::MatrixXcd::Zero(K, N);

  Eigen::MatrixXcd x(T, N);
  for (int t = 0; t < T; ++t) {
    const double sign = (t % 2 == 0) ? 1.0 : -1.0;
    x.row(t) = sign * y.row(t % K);
  }

  const PhaseTable table(K);
  const auto& atoms = sm_.atoms();
  for (std::size_t l = 0; l < atoms.size(); ++l) {
    const Eigen::RowVectorXcd xi = draw.xi[l].transpose();
    for (int t = 0; t < T; ++t) {
      const cplx ph = atom_index_[l] >= 0 ? table.at_grid(t, atom_index_[l])
                                          : std::polar(1.0, t * atoms[l].frequency);
      x.row(t) += ph * xi;
    }
  }
  return x;
}

FuncSeries Synthesizer::simulate(int T, std::uint64_t seed) const {
  if (T < 1) throw DomainError("simulate: T must be positive");
  if (sm_.num_freqs() < 2 * T)
    std::clog << "funspec: warning: synthesis grid K=" << sm_.num_freqs() << " is smaller than 2T=" << 2 * T
              << "; the output is periodic with period K\n";
  const Eigen::MatrixXcd x = synthesize(draw(seed), T);
  if (!real_) return FuncSeries::from_coords(sm_.grid(), x, false);
  const double rms = std::sqrt(x.squaredNorm() / std::max<Eigen::Index>(1, x.size()));
  if (x.imag().cwiseAbs().maxCoeff() > 1e-8 * std::max(rms, 1e-300))
    throw NumericError("simulate: real synthesis produced a non-negligible imaginary part");
  return FuncSeries::from_coords(sm_.grid(), x, true);
}

FuncSeries simulate(const SpectralMeasure& sm, int T, std::uint64_t seed, bool real_output) {
  return Synthesizer(sm, real_output).simulate(T, seed);
}

// ---------------------------------------------------------------------------
// Analytic covariances

LagCovSequence ma_lag_cov_closed_form(const LinearMA& ma, int max_lag) {
  if (max_lag < 0) throw DomainError("ma_lag_cov_closed_form: max_lag must be non-negative");
  const auto grid = ma.sigma.grid();
  const int J = static_cast<int>(ma.theta.size()) - 1;
  std::vector<Op> ops;
  for (int h = 0; h <= max_lag; ++h) {
    Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(grid->size(), grid->size());
    for (int j = 0; j + h <= J; ++j)
      c += ma.theta[static_cast<std::size_t>(j + h)].coords() * ma.sigma.coords() *
           ma.theta[static_cast<std::size_t>(j)].coords().adjoint();
    if (h == 0) c = linalg::hermitian_part(c);
    ops.push_back(h == 0 ? Op::trusted_psd(grid, std::move(c)) : Op::from_coords(grid, std::move(c)));
  }
  return LagCovSequence(grid, std::move(ops));
}

LagCovSequence analytic_lag_cov(const ModelSpec& model, int max_lag, int K, PoleHandling pole) {
  if (2 * max_lag > K) throw DomainError("analytic_lag_cov: max_lag exceeds K/2");
  LagCovSequence seq = herglotz_inverse_sequence(model_spectral_measure(model, K, pole), max_lag);
  if (const auto* ma = std::get_if<LinearMA>(&model.continuous); ma && model.atoms.empty()) {
    const LagCovSequence closed = ma_lag_cov_closed_form(*ma, max_lag);
    const double scale = std::max(linalg::trace_norm(closed.coords(0)), 1e-300);
    for (int h = 0; h <= max_lag; ++h) {
      if (linalg::trace_norm(seq.coords(h) - closed.coords(h)) > 1e-8 * scale)
        throw NumericError("analytic_lag_cov: quadrature and closed-form MA covariances disagree");
    }
  }
  return seq;
}

}  // namespace funspec

// Acceptance suite: prints one PASS/FAIL line per criterion.

#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>

#include "cli_support.hpp"
#include "funspec/covariance.hpp"
#include "funspec/cramer.hpp"
#include "funspec/fourier.hpp"
#include "funspec/hfpca.hpp"
#include "funspec/parallel.hpp"
#include "funspec/spectral.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace funspec;
using namespace funspec::testing;
using std::numbers::pi;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  // Records a sub-check; the criterion passes only if every sub-check does.
  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    detail << (detail.tellp() > 0 ? "; " : "") << what << (ok ? "" : " [failed]");
  }
};

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

// 1. Herglotz round trip.
void herglotz_round_trip(Outcome& o) {
  auto f = make_fma1(32, 101);
  auto lc = ma_lag_cov_closed_form(std::get<LinearMA>(f.model.continuous), 128);
  const double c0 = tnorm(lc.coords(0));
  std::vector<double> worst;
  for (int q : {16, 32, 64, 128}) {
    auto sm = herglotz_forward(lc, 2048, q, Window::fejer);
    double w = 0;
    for (int h = -4; h <= 4; ++h) {
      const Eigen::MatrixXcd c = lc.at(h).coords();
      const double ref = tnorm(c) > 1e-12 * c0 ? tnorm(c) : c0;
      w = std::max(w, tnorm(herglotz_inverse(sm, h).coords() - c) / ref);
    }
    worst.push_back(w);
  }
  o.check(worst[3] <= 0.02, "q=128 max error " + num(worst[3]) + " <= 0.02");
  const bool mono = worst[0] > worst[1] && worst[1] > worst[2] && worst[2] > worst[3];
  o.check(mono, "errors over q=16,32,64,128: " + num(worst[0]) + ", " + num(worst[1]) + ", " + num(worst[2]) + ", " +
                    num(worst[3]));
}

// 2. Positivity of the biased estimator.
void positivity(Outcome& o) {
  std::mt19937_64 rng(202);
  auto g = Grid::make(16);
  auto f = make_fma1(16, 203);
  ModelSpec harmonic = ModelSpec::white_noise(random_psd(g, rng, 16, 0.3));
  harmonic.atoms = {{2 * pi * 64 / 1024, random_psd(g, rng, 2)}};
  const std::pair<const char*, ModelSpec> models[] = {
      {"white", ModelSpec::white_noise(random_psd(g, rng, 16))},
      {"fma1", f.model},
      {"harmonic", harmonic},
      {"long-memory", ModelSpec::long_memory(random_psd(g, rng, 4), 0.3)},
  };
  double worst_eig = INFINITY, worst_q = INFINITY;
  std::uint64_t seed = 0;
  for (const auto& [name, model] : models) {
    Synthesizer syn(model_spectral_measure(model, 2048), true);
    for (int rep = 0; rep < 3; ++rep) {
      auto lc = empirical_lag_cov(syn.simulate(1024, ++seed), 7);
      const double tn = tnorm(lc.coords(0));
      auto r = check_nonneg_def(lc, 8, 1000, seed);
      worst_eig = std::min(worst_eig, r.min_block_eigenvalue / tn);
      worst_q = std::min(worst_q, r.min_quadratic_form / (8 * 16 * tn));
    }
  }
  o.check(worst_eig >= -1e-8, "min block eigenvalue / ||C0||_1 = " + num(worst_eig));
  o.check(worst_q >= -1e-8, "min probe form / scale = " + num(worst_q) + " (12000 probes)");
}

// 3. Second-order fidelity of the synthesis.
void synthesis_fidelity(Outcome& o) {
  auto f = make_fma1(16, 303);
  const int T = 8192;
  const Eigen::MatrixXcd c1 = f.theta.coords() * f.sigma.coords();
  Synthesizer fma(model_spectral_measure(f.model, default_synthesis_size(T)), true);
  std::mt19937_64 rng(304);
  Synthesizer white(model_spectral_measure(ModelSpec::white_noise(random_psd(f.grid, rng, 16)), default_synthesis_size(T)),
                    true);
  double err = 0, ratio = 0;
  for (int s = 0; s < 50; ++s) {
    err += tnorm(empirical_lag_cov(fma.simulate(T, 1000 + s), 1).coords(1) - c1) / tnorm(c1) / 50;
    auto lc = empirical_lag_cov(white.simulate(T, 2000 + s), 1);
    ratio += tnorm(lc.coords(1)) / tnorm(lc.coords(0)) / 50;
  }
  o.check(err <= 0.15, "FMA(1) mean ||C1hat - Theta Sigma||_1 / ||Theta Sigma||_1 = " + num(err));
  o.check(ratio <= 0.1, "white noise mean ||C1hat||_1 / ||C0hat||_1 = " + num(ratio));
}

// 4. Jump decomposition.
void jumps(Outcome& o) {
  std::mt19937_64 rng(404);
  auto g = Grid::make(16);
  auto at = model_spectral_measure(ModelSpec::atoms_only(g, {{pi / 2, random_psd(g, rng, 3)}}), 64);
  auto x = simulate(at, 32, 1, true);
  bool periodic = x.coords().cwiseAbs().maxCoeff() > 0;
  for (int t = 0; t + 4 < 32; ++t) periodic = periodic && (x.coords().row(t + 4) == x.coords().row(t));
  o.check(periodic, "atoms at +-pi/2: X_{t+4} == X_t bitwise");

  const int T = 2048;
  const double w0 = 2 * pi * 300 / T;
  const Op J = random_psd(g, rng, 2, 1.0);
  ModelSpec mixed = ModelSpec::white_noise(random_psd(g, rng, 16, 0.05));
  mixed.atoms = {{w0, J}};
  Synthesizer syn(model_spectral_measure(mixed, default_synthesis_size(T)), true);
  Synthesizer white(model_spectral_measure(ModelSpec::white_noise(random_psd(g, rng, 16)), default_synthesis_size(T)), true);
  double tr = 0;
  int found = 0, false_alarms = 0;
  for (int s = 0; s < 100; ++s) {
    for (const auto& a : detect_atoms(syn.simulate(T, 4000 + s), 0.01, 8))
      if (std::abs(a.frequency - w0) < 1e-12) {
        tr += a.jump.trace().real();
        ++found;
      }
    false_alarms += detect_atoms(white.simulate(T, 5000 + s), 0.01, 8).empty() ? 0 : 1;
  }
  const double mean = found ? tr / found / J.trace().real() : 0.0;
  o.check(found >= 95 && std::abs(mean - 1) <= 0.2,
          "detected " + std::to_string(found) + "/100, mean trace / tr J = " + num(mean));
  o.check(false_alarms <= 5, "white-noise false detections " + std::to_string(false_alarms) + "/100 at alpha=0.01");
}

// 5. Isometry.
void isometry(Outcome& o) {
  auto f = make_fma1(16, 505);
  auto lc = ma_lag_cov_closed_form(std::get<LinearMA>(f.model.continuous), 64);
  auto sm = model_spectral_measure(f.model, 4096);
  std::mt19937_64 rng(506);
  std::uniform_int_distribution<int> tpick(0, 64);
  std::normal_distribution<double> nd;
  double worst = 0;
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<int> times;
    std::vector<cplx> a, b;
    for (int i = 0; i < 6; ++i) {
      times.push_back(tpick(rng));
      a.emplace_back(nd(rng), nd(rng));
      b.push_back(rep % 2 ? cplx(nd(rng), nd(rng)) : a.back());
    }
    auto p = isometry_gram(lc, sm, times, a, b);
    if (std::abs(p.lhs) > 0) worst = std::max(worst, std::abs(p.lhs - p.rhs) / std::abs(p.lhs));
  }
  o.check(worst <= 1e-6, "max |lhs - rhs| / |lhs| = " + num(worst) + " over 50 Gram pairs");

  const int T = 1024;
  Synthesizer syn(model_spectral_measure(f.model, default_synthesis_size(T)), true);
  const FuncSeries zero(f.grid, Eigen::MatrixXd::Zero(T, 16));
  double power = 0;
  for (int s = 0; s < 50; ++s) power += mean_squared_error(syn.simulate(T, 600 + s), zero) / 50;
  const double mass = trace_measure(syn.measure(), -pi, pi);
  o.check(std::abs(power / mass - 1) <= 0.1, "Parseval: mean ||X_t||^2 / mass = " + num(power / mass));
}

// 6. Harmonic FPCA.
double optimality(const ModelSpec& model, int T, int p, std::uint64_t seed, Outcome& o, const std::string& name) {
  auto eig = eigendecompose_measure(model_spectral_measure(model, T));
  auto ranks = fixed_ranks(eig, p);
  Synthesizer syn(model_spectral_measure(model, default_synthesis_size(T)), true);
  std::vector<double> comp(20, 0.0);
  double opt = 0;
  for (int s = 0; s < 20; ++s) {
    auto cmp = compare_filters(syn.simulate(T, seed + s), eig, ranks, 20, seed + 100 + s);
    opt += cmp.optimal_error / 20;
    for (int c = 0; c < 20; ++c) comp[c] += cmp.competitor_errors[c] / 20;
  }
  const double best = *std::min_element(comp.begin(), comp.end());
  o.check(opt <= best, name + ": mean optimal error " + num(opt) + " <= best competitor mean " + num(best));
  return opt;
}

void hfpca(Outcome& o) {
  auto f = make_fma1(16, 606);
  const int T = 8192;
  auto eig = eigendecompose_measure(model_spectral_measure(f.model, T));
  auto ranks = fixed_ranks(eig, 1);
  const double formula = truncation_error(eig, ranks, eig.delta());
  Synthesizer syn(model_spectral_measure(f.model, default_synthesis_size(T)), true);
  double emp = 0;
  for (int s = 0; s < 50; ++s) {
    auto x = syn.simulate(T, 700 + s);
    emp += mean_squared_error(x, optimal_filter(x, eig, ranks)) / 50;
  }
  o.check(std::abs(emp / formula - 1) <= 0.15,
          "FMA(1) p=1 empirical " + num(emp) + " vs truncation_error " + num(formula));
  optimality(f.model, T, 1, 800, o, "FMA(1)");

  std::mt19937_64 rng(607);
  const int Th = 2048;
  ModelSpec harm = ModelSpec::white_noise(random_psd(f.grid, rng, 16, 0.2));
  harm.atoms = {{2 * pi * 200 / Th, random_psd(f.grid, rng, 4)}, {2 * pi * 600 / Th, random_psd(f.grid, rng, 4)}};
  optimality(harm, Th, 2, 900, o, "harmonic atoms");
}

// 7. Long memory.
void long_memory(Outcome& o) {
  const double d = 0.3;
  auto g4 = Grid::make(4);
  auto lc = analytic_lag_cov(ModelSpec::long_memory(Op::identity(g4), d), 512, 1 << 18);
  std::vector<double> hs, tr;
  for (int h = 64; h <= 512; h *= 2) {
    hs.push_back(h);
    tr.push_back(lc.at(h).trace().real());
  }
  const double slope = oracle::loglog_slope(hs, tr);
  o.check(std::abs(slope - (2 * d - 1)) <= 0.1, "log-log slope " + num(slope) + " (K=2^18)");

  const auto psi = ma_coefficients_longmemory(d, 1000);
  const double ratio = psi[1000] * std::tgamma(d) * std::pow(1000.0, 1 - d);
  o.check(std::abs(ratio - 1) <= 0.05, "psi_1000 Gamma(d) 1000^(1-d) = " + num(ratio));

  std::mt19937_64 rng(707);
  auto g = Grid::make(16);
  const Op sigma = random_psd(g, rng, 16);
  const int K = 4096;
  const ModelSpec model = ModelSpec::long_memory(sigma, d);
  auto sm = model_spectral_measure(model, K, PoleHandling::exclude);
  auto eig = eigendecompose_measure(sm);
  auto ranks = fixed_ranks(eig, 2);
  auto x = simulate(sm, K / 2, 1, true);
  auto xs = optimal_filter(x, eig, ranks);
  const double got = truncation_error(eig, ranks, eig.delta());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sigma.coords(), Eigen::EigenvaluesOnly);
  const Eigen::VectorXd lam = es.eigenvalues().reverse();
  const double omitted = lam.tail(14).sum();
  const double half_cell = pi / K;
  const double mass = 2 * oracle::singular_integral([d](double w) { return oracle::long_memory_regular(w, d); }, 2 * d,
                                                    half_cell, pi, 1e-12);
  const double expect = omitted * mass;
  const bool finite = xs.coords().allFinite();
  o.check(finite && std::abs(got / expect - 1) <= 0.02,
          "hfpca with omega=0 excluded: truncation_error " + num(got) + " vs quadrature " + num(expect));
}

// 8. Norm bound.
void norm_bound(Outcome& o) {
  auto f = make_fma1(16, 808);
  auto sm = model_spectral_measure(f.model, 256);
  auto eig = eigendecompose_measure(sm);
  std::mt19937_64 rng(809);
  std::uniform_int_distribution<int> pick(0, 16);
  int ok = 0;
  for (int rep = 0; rep < 100; ++rep) {
    RankSchedule r = fixed_ranks(eig, 0);
    for (auto& p : r.density_ranks) p = pick(rng);
    auto b = filter_norm_bound_check(eig, r, sm);
    ok += b.lhs <= b.rhs ? 1 : 0;
  }
  o.check(ok == 100, std::to_string(ok) + "/100 random schedules with lhs <= rhs");
  auto full = filter_norm_bound_check(eig, fixed_ranks(eig, 16), sm);
  const double gap = std::abs(full.lhs - full.rhs) / full.rhs;
  o.check(gap <= 1e-10, "full rank |lhs - rhs| / rhs = " + num(gap));
}

// 9. Determinism across thread counts.
std::string bytes(const Eigen::MatrixXcd& m) {
  return std::string(reinterpret_cast<const char*>(m.data()), sizeof(cplx) * static_cast<std::size_t>(m.size()));
}

std::string library_fingerprint() {
  std::string out;
  auto f = make_fma1(12, 909);
  auto sm = model_spectral_measure(f.model, 512);
  auto x = simulate(sm, 256, 3, true);
  out += bytes(x.coords());
  auto lm = model_spectral_measure(ModelSpec::long_memory(f.sigma, 0.3), 512);
  out += bytes(simulate(lm, 256, 4, true).coords());
  auto lc = empirical_lag_cov(x, 16);
  for (int h = 0; h <= 16; ++h) out += bytes(lc.coords(h));
  auto est = herglotz_forward(lc, 128, 16, Window::parzen);
  for (const auto& d : est.densities()) out += bytes(d.coords());
  out += bytes(herglotz_inverse(est, 3).coords());
  auto alc = analytic_lag_cov(f.model, 8, 512);
  out += bytes(alc.coords(1));
  auto nn = check_nonneg_def(lc, 4, 50, 5);
  out += std::to_string(nn.min_quadratic_form) + std::to_string(nn.min_block_eigenvalue);
  for (const auto& a : detect_atoms(x, 0.01, 8)) out += bytes(a.jump.coords());
  auto eig = eigendecompose_measure(sm);
  for (const auto& es : eig.densities) out += bytes(es.vectors);
  auto ranks = select_ranks(eig, 0.8);
  out += bytes(optimal_filter(x, eig, ranks).coords());
  auto cmp = compare_filters(x, eig, ranks, 5, 6);
  for (double e : cmp.competitor_errors) out += std::to_string(e);
  return out;
}

std::string cli_fingerprint(const fs::path& dir, const std::string& prefix) {
  const std::string cli = FUNSPEC_CLI_PATH;
  const fs::path cfg = dir / "config.json";
  const fs::path out = dir / "run";
  fs::remove_all(out);
  const std::string q = " --config " + cfg.string() + " --out " + out.string() + " ";
  int rc = 0;
  for (const std::string& cmd : {std::string("simulate"), "estimate " + (out / "series.csv").string(), std::string("roundtrip"),
                                 std::string("hfpca"), "report " + out.string()}) {
    rc |= std::system((prefix + " " + cli + " " + cmd + q + "> /dev/null").c_str());
  }
  if (rc != 0) return "command failed";
  std::string all;
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(out))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& p : files) all += p.filename().string() + slurp(p);
  return all;
}

void determinism(Outcome& o) {
  const int saved = num_threads();
  std::vector<std::string> lib;
  for (int t : {1, 2, 8}) {
    set_num_threads(t);
    lib.push_back(library_fingerprint());
  }
  set_num_threads(saved);
  o.check(lib[0] == lib[1] && lib[0] == lib[2], "library entry points bit-identical for 1, 2, 8 threads");

  TempDir dir("accept");
  dir.write("config.json", R"({
  "schema_version": 1,
  "grid": {"n": 8},
  "model": {"type": "fma1", "sigma": {"kind": "random_psd", "seed": 1},
            "theta": {"kind": "random", "opnorm": 0.6, "seed": 2},
            "atoms": [{"frequency": 0.78539816339744828, "amplitude": {"kind": "rank_one"}}]},
  "simulation": {"T": 512, "seed": 17},
  "spectral": {"q": 16, "K": 64},
  "roundtrip": {"max_lag": 4, "tol": 0.2},
  "hfpca": {"rank": {"fixed": 2}}
})");
  std::vector<std::string> runs;
  for (const char* prefix : {"", "FUNSPEC_THREADS=2", "FUNSPEC_THREADS=8"}) runs.push_back(cli_fingerprint(dir.path(), prefix));
  o.check(runs[0] != "command failed" && runs[0] == runs[1] && runs[0] == runs[2],
          "CLI outputs bit-identical with FUNSPEC_THREADS unset, 2, 8");
  std::vector<std::string> flags;
  for (const char* t : {"1", "2", "8"}) {
    // --threads flows through every subcommand.
    TempDir sub("accept");
    fs::copy_file(dir / "config.json", sub / "config.json");
    const std::string cli = FUNSPEC_CLI_PATH;
    const fs::path out = sub / "run";
    const std::string q = std::string(" --threads ") + t + " --config " + (sub / "config.json").string() + " --out " + out.string();
    int rc = std::system((cli + " simulate" + q + " > /dev/null").c_str());
    rc |= std::system((cli + " hfpca" + q + " > /dev/null").c_str());
    flags.push_back(rc == 0 ? slurp(out / "series.csv") + slurp(out / "xstar.csv") + slurp(out / "hfpca.json") : "failed");
  }
  o.check(flags[0] != "failed" && flags[0] == flags[1] && flags[0] == flags[2], "CLI outputs bit-identical for --threads 1, 2, 8");
}

}  // namespace

int main(int argc, char** argv) {
  const std::pair<const char*, std::function<void(Outcome&)>> criteria[] = {
      {"Herglotz round trip", herglotz_round_trip},
      {"Positivity of the lag-covariance kernel", positivity},
      {"Cramer synthesis second-order fidelity", synthesis_fidelity},
      {"Jump decomposition", jumps},
      {"Isometry and Parseval", isometry},
      {"Harmonic FPCA optimality and error formula", hfpca},
      {"Long memory", long_memory},
      {"Filter norm bound", norm_bound},
      {"Determinism across thread counts", determinism},
  };
  const int only = argc > 1 ? std::atoi(argv[1]) : 0;
  int failed = 0;
  for (int i = 0; i < 9; ++i) {
    if (only && only != i + 1) continue;
    Outcome o;
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << i + 1 << " " << criteria[i].first << ": " << o.detail.str() << std::endl;
  }
  return failed == 0 ? 0 : 1;
}

#include "funspec/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>

#include <json.hpp>

#include "funspec/config.hpp"
#include "funspec/covariance.hpp"
#include "funspec/cramer.hpp"
#include "funspec/errors.hpp"
#include "funspec/hfpca.hpp"
#include "funspec/io.hpp"
#include "funspec/spectral.hpp"

namespace funspec::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

RunConfig require_config(const CommandOptions& opts, const char* cmd) {
  if (!opts.config) throw ConfigError(std::string(cmd) + ": --config is required");
  return load_config(*opts.config);
}

const ModelSpec& require_model(const RunConfig& cfg, const char* cmd) {
  if (!cfg.model) throw ConfigError(cfg.source.string() + ":1: field 'model' is required for " + cmd);
  return *cfg.model;
}

fs::path out_dir(const CommandOptions& opts, const std::optional<RunConfig>& cfg) {
  if (opts.out) return *opts.out;
  if (cfg && cfg->out_dir) return *cfg->out_dir;
  return ".";
}

void write_json(const fs::path& p, const json& j) {
  fs::create_directories(p.parent_path());
  std::ofstream f(p);
  if (!f) throw io::IoError("cannot open " + p.string() + " for writing");
  f << j.dump(2) << '\n';
}

fs::path series_path(const fs::path& dir, const std::string& stem, const FuncSeries& s) {
  return dir / (stem + (s.is_real() ? ".csv" : ".json"));
}

int next_pow2(int n) {
  int p = 1;
  while (p < n) p *= 2;
  return p;
}

// Lag-window settings for a series of length T.
struct SpectralSettings {
  Window window;
  int q;
  int K;
};

SpectralSettings spectral_settings(const std::optional<RunConfig>& cfg, int T) {
  SpectralSettings s{cfg ? cfg->window : Window::fejer, 0, 0};
  s.q = cfg && cfg->q ? *cfg->q : std::max(1, static_cast<int>(std::sqrt(static_cast<double>(T))));
  if (s.q > T - 1) throw DomainError("bandwidth q = " + std::to_string(s.q) + " needs at least q+1 frames, the series has " + std::to_string(T));
  s.K = cfg && cfg->spectral_K ? *cfg->spectral_K : std::max(64, 2 * next_pow2(2 * s.q + 2));
  return s;
}

SpectralMeasure estimate_measure(const FuncSeries& x, const SpectralSettings& s) {
  return herglotz_forward(empirical_lag_cov(x, s.q, true), s.K, s.q, s.window);
}

json atoms_json(const std::vector<SpectralMeasure::Atom>& atoms, int T) {
  json list = json::array();
  for (const auto& a : atoms)
    list.push_back(json{{"frequency", a.frequency},
                        {"fourier_index", static_cast<long>(std::lround(a.frequency * T / (2 * std::numbers::pi)))},
                        {"trace", a.jump.trace().real()}});
  return list;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

std::optional<RunConfig> optional_config(const CommandOptions& opts) {
  if (!opts.config) return std::nullopt;
  return load_config(*opts.config);
}

}  // namespace

int cmd_simulate(const CommandOptions& opts, std::ostream& out) {
  const RunConfig cfg = require_config(opts, "simulate");
  const ModelSpec& model = require_model(cfg, "simulate");
  const std::uint64_t seed = opts.seed.value_or(cfg.seed);
  const int K = cfg.synthesis_size();
  const SpectralMeasure sm = model_spectral_measure(model, K, cfg.pole);
  const FuncSeries x = simulate(sm, cfg.T, seed, model.real_output);

  const fs::path dir = out_dir(opts, cfg);
  const fs::path sp = series_path(dir, "series", x);
  io::write_series(sp, x);
  io::write_measure(dir / "measure.json", sm);
  write_json(dir / "simulate.json", json{{"seed", seed},
                                         {"T", cfg.T},
                                         {"K", K},
                                         {"grid_size", cfg.grid->size()},
                                         {"real_output", model.real_output},
                                         {"total_mass", sm.total_mass()},
                                         {"series", sp.filename().string()},
                                         {"measure", "measure.json"}});
  out << "simulated " << cfg.T << " frames on " << cfg.grid->size() << " grid points (K = " << K << ", seed " << seed
      << ")\n"
      << "wrote " << sp.string() << " and " << (dir / "measure.json").string() << '\n';
  return kOk;
}

int cmd_estimate(const CommandOptions& opts, std::ostream& out) {
  if (opts.inputs.size() != 1) throw ConfigError("estimate: expected exactly one series file");
  const auto cfg = optional_config(opts);
  const FuncSeries x = io::read_series(opts.inputs[0]);
  const SpectralSettings s = spectral_settings(cfg, x.length());
  const SpectralMeasure sm = estimate_measure(x, s);
  const FrequencyEigens eig = eigendecompose_measure(sm);

  std::vector<SpectralMeasure::Atom> atoms;
  const double alpha = cfg ? cfg->detect_alpha : 0.01;
  const int m = cfg ? cfg->detect_m : 8;
  const bool detect = x.length() >= 64;
  if (detect) atoms = detect_atoms(x, alpha, m);

  const fs::path dir = out_dir(opts, cfg);
  io::write_measure(dir / "measure.json", sm);
  io::write_eigens(dir / "eigens.json", eig);
  io::write_eigenvalue_table(dir / "eigenvalues.csv", eig, sm);
  write_json(dir / "atoms.json", json{{"alpha", alpha},
                                      {"neighbours", m},
                                      {"tested", detect},
                                      {"length", x.length()},
                                      {"atoms", atoms_json(atoms, x.length())}});
  write_json(dir / "estimate.json", json{{"series", opts.inputs[0].filename().string()},
                                         {"window", std::string(to_string(s.window))},
                                         {"q", s.q},
                                         {"K", s.K},
                                         {"total_mass", sm.total_mass()}});

  out << "estimated " << to_string(s.window) << " lag-window measure from " << x.length() << " frames (q = " << s.q
      << ", K = " << s.K << "), total trace mass " << fmt(sm.total_mass()) << '\n';
  if (!detect) out << "series shorter than 64 frames; atom detection skipped\n";
  out << atoms.size() << " atom(s) detected at alpha = " << alpha << '\n';
  for (const auto& a : atoms) out << "  omega = " << fmt(a.frequency) << "  trace = " << fmt(a.jump.trace().real()) << '\n';
  return kOk;
}

int cmd_roundtrip(const CommandOptions& opts, std::ostream& out) {
  const RunConfig cfg = require_config(opts, "roundtrip");
  const ModelSpec& model = require_model(cfg, "roundtrip");
  const double tol = opts.tol.value_or(cfg.tol);
  const int q = cfg.q.value_or(64);
  const int K = cfg.spectral_K.value_or(std::max(64, 2 * next_pow2(2 * q + 2)));
  const int L = cfg.max_lag;
  if (2 * L > K) throw ConfigError(cfg.source.string() + ": field 'roundtrip.max_lag' must be at most K/2 = " + std::to_string(K / 2));

  const int analytic_lags = std::max(q, L);
  if (2 * analytic_lags > cfg.analytic_K)
    throw ConfigError(cfg.source.string() + ": field 'roundtrip.analytic_K' must be at least " + std::to_string(2 * analytic_lags));
  const LagCovSequence lc = analytic_lag_cov(model, analytic_lags, cfg.analytic_K, cfg.pole);
  const SpectralMeasure sm = herglotz_forward(lc, K, q, cfg.window);

  const double scale = linalg::trace_norm(lc.coords(0));
  if (scale == 0.0) throw DomainError("roundtrip: the model has zero variance");
  json rows = json::array();
  double worst = 0;
  out << "lag  relative trace-norm error (tol " << tol << ")\n";
  for (int h = -L; h <= L; ++h) {
    const double err = linalg::trace_norm(herglotz_inverse(sm, h).coords() - lc.at(h).coords()) / scale;
    worst = std::max(worst, err);
    rows.push_back(json{{"lag", h}, {"error", err}});
    out << std::setw(3) << h << "  " << fmt(err) << (err <= tol ? "" : "  FAIL") << '\n';
  }
  const bool pass = worst <= tol;
  write_json(out_dir(opts, cfg) / "roundtrip.json", json{{"window", std::string(to_string(cfg.window))},
                                                         {"q", q},
                                                         {"K", K},
                                                         {"tol", tol},
                                                         {"max_error", worst},
                                                         {"pass", pass},
                                                         {"lags", rows}});
  out << (pass ? "round trip within tolerance" : "round trip exceeds tolerance") << " (max error " << fmt(worst) << ")\n";
  return pass ? kOk : kToleranceFailure;
}

int cmd_hfpca(const CommandOptions& opts, std::ostream& out) {
  if (opts.inputs.size() > 1) throw ConfigError("hfpca: expected at most one series file");
  const auto cfg = optional_config(opts);
  if (opts.inputs.empty() && !(cfg && cfg->model))
    throw ConfigError("hfpca: give a series file or a config with a model");
  const fs::path dir = out_dir(opts, cfg);

  std::optional<FuncSeries> x;
  if (!opts.inputs.empty()) {
    x = io::read_series(opts.inputs[0]);
  } else {
    const std::uint64_t seed = opts.seed.value_or(cfg->seed);
    x = simulate(model_spectral_measure(*cfg->model, cfg->synthesis_size(), cfg->pole), cfg->T, seed, cfg->model->real_output);
    io::write_series(series_path(dir, "series", *x), *x);
  }
  const int T = x->length();

  std::optional<SpectralMeasure> sm;
  std::string source;
  if (cfg && cfg->model) {
    const int K = cfg->hfpca_K.value_or(std::max(16, T + T % 2));
    sm = model_spectral_measure(*cfg->model, K, cfg->pole);
    source = "model";
  } else {
    const SpectralSettings s = spectral_settings(cfg, T);
    sm = estimate_measure(*x, s);
    source = "estimate";
  }
  const FrequencyEigens eig = eigendecompose_measure(*sm);
  const RankPolicy policy = cfg ? cfg->rank : RankPolicy{std::nullopt, 0.9};
  const RankSchedule ranks = policy.fixed ? fixed_ranks(eig, *policy.fixed) : select_ranks(eig, *policy.fraction);

  const FuncSeries xs = optimal_filter(*x, eig, ranks);
  const double predicted = truncation_error(eig, ranks, eig.delta());
  const double empirical = mean_squared_error(*x, xs);
  const double power = x->coords().squaredNorm() / T;

  io::write_series(series_path(dir, "xstar", xs), xs);
  io::write_rank_schedule(dir / "ranks.csv", ranks, *sm);
  json policy_j = policy.fixed ? json{{"fixed", *policy.fixed}} : json{{"fraction", *policy.fraction}};
  write_json(dir / "hfpca.json", json{{"measure_source", source},
                                      {"K", sm->num_freqs()},
                                      {"T", T},
                                      {"rank_policy", policy_j},
                                      {"max_rank", *std::max_element(ranks.density_ranks.begin(), ranks.density_ranks.end())},
                                      {"predicted_error", predicted},
                                      {"empirical_error", empirical},
                                      {"signal_power", power},
                                      {"relative_gap", predicted > 0 ? std::abs(empirical - predicted) / predicted : 0.0}});
  out << "harmonic FPCA on " << T << " frames, " << source << " measure with K = " << sm->num_freqs() << '\n'
      << "predicted error " << fmt(predicted) << ", empirical error " << fmt(empirical) << ", signal power " << fmt(power)
      << '\n';
  return kOk;
}

int cmd_report(const CommandOptions& opts, std::ostream& out) {
  if (opts.inputs.size() > 1) throw ConfigError("report: expected at most one directory");
  const fs::path dir = !opts.inputs.empty() ? opts.inputs[0] : opts.out.value_or(".");
  if (!fs::is_directory(dir)) throw io::IoError(dir.string() + ": not a directory");
  json rep;
  bool found = false;

  if (fs::exists(dir / "measure.json")) {
    found = true;
    const SpectralMeasure sm = io::read_measure(dir / "measure.json");
    double lo = INFINITY, hi = -INFINITY, peak_w = 0;
    for (int k = 0; k < sm.num_freqs(); ++k) {
      const double tr = sm.density(k).trace().real();
      lo = std::min(lo, tr);
      if (tr > hi) {
        hi = tr;
        peak_w = sm.frequency(k);
      }
    }
    json atoms = json::array();
    for (const auto& a : sm.atoms()) atoms.push_back(json{{"frequency", a.frequency}, {"trace", a.jump.trace().real()}});
    rep["measure"] = json{{"grid_size", sm.grid()->size()},
                          {"quadrature", std::string(to_string(sm.grid()->rule()))},
                          {"K", sm.num_freqs()},
                          {"total_mass", sm.total_mass()},
                          {"density_trace_min", lo},
                          {"density_trace_max", hi},
                          {"peak_frequency", peak_w},
                          {"flagged_cells", sm.flagged_cells()},
                          {"atoms", atoms}};
    out << "measure: N = " << sm.grid()->size() << ", K = " << sm.num_freqs() << ", total mass " << fmt(sm.total_mass())
        << ", density trace in [" << fmt(lo) << ", " << fmt(hi) << "], " << sm.atoms().size() << " atom(s)\n";
  }
  for (const char* stem : {"series", "xstar"}) {
    for (const char* ext : {".csv", ".json"}) {
      const fs::path p = dir / (std::string(stem) + ext);
      if (!fs::exists(p) || (std::string(ext) == ".json" && !fs::exists(dir / (std::string(stem) + ".frames.re.bin"))))
        continue;
      found = true;
      const FuncSeries x = io::read_series(p);
      const double power = x.coords().squaredNorm() / x.length();
      rep[stem] = json{{"file", p.filename().string()}, {"length", x.length()}, {"grid_size", x.grid()->size()}, {"mean_squared_norm", power}};
      out << stem << ": " << x.length() << " frames, mean squared norm " << fmt(power) << '\n';
    }
  }
  for (const char* name : {"roundtrip", "hfpca", "atoms", "simulate", "estimate"}) {
    const fs::path p = dir / (std::string(name) + ".json");
    if (!fs::exists(p)) continue;
    found = true;
    std::ifstream f(p);
    try {
      rep[name] = json::parse(f);
    } catch (const json::parse_error& e) {
      throw io::IoError(p.string() + ": " + e.what());
    }
  }
  if (rep.contains("roundtrip"))
    out << "roundtrip: max error " << fmt(rep["roundtrip"]["max_error"].get<double>()) << " ("
        << (rep["roundtrip"]["pass"].get<bool>() ? "pass" : "fail") << ")\n";
  if (rep.contains("hfpca"))
    out << "hfpca: predicted " << fmt(rep["hfpca"]["predicted_error"].get<double>()) << ", empirical "
        << fmt(rep["hfpca"]["empirical_error"].get<double>()) << '\n';
  if (rep.contains("atoms")) out << "atoms: " << rep["atoms"]["atoms"].size() << " detected\n";
  if (!found) throw io::IoError(dir.string() + ": no funspec outputs found");

  write_json(opts.out.value_or(dir) / "report.json", rep);
  return kOk;
}

int run_command(const std::string& name, const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    if (name == "simulate") return cmd_simulate(opts, out);
    if (name == "estimate") return cmd_estimate(opts, out);
    if (name == "roundtrip") return cmd_roundtrip(opts, out);
    if (name == "hfpca") return cmd_hfpca(opts, out);
    if (name == "report") return cmd_report(opts, out);
    err << "funspec: unknown command '" << name << "'\n";
    return kInputError;
  } catch (const ConfigError& e) {
    err << "funspec: invalid config: " << e.what() << '\n';
    return kInputError;
  } catch (const io::IoError& e) {
    err << "funspec: input error: " << e.what() << '\n';
    return kInputError;
  } catch (const DomainError& e) {
    err << "funspec: invalid input: " << e.what() << '\n';
    return kInputError;
  } catch (const fs::filesystem_error& e) {
    err << "funspec: file error: " << e.what() << '\n';
    return kInputError;
  } catch (const NumericError& e) {
    err << "funspec: numeric failure: " << e.what() << '\n';
    return kNumericFailure;
  } catch (const std::exception& e) {
    err << "funspec: numeric failure: " << e.what() << '\n';
    return kNumericFailure;
  }
}

}  // namespace funspec::cli

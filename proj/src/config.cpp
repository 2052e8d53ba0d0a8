#include "funspec/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "funspec/errors.hpp"
#include "funspec/random.hpp"
#include "runconfig_schema.hpp"

namespace funspec {

using nlohmann::json;

namespace {

// Maps each JSON pointer in a document to the line its value starts on.
// The text has already been accepted by the JSON parser.
class LineIndex {
 public:
  explicit LineIndex(const std::string& text) : s_(text) {
    skip_ws();
    value("");
  }

  int line_of(const std::string& pointer) const {
    for (std::string p = pointer;; p = p.substr(0, p.rfind('/'))) {
      auto it = lines_.find(p);
      if (it != lines_.end()) return it->second;
      if (p.empty()) return 1;
    }
  }

 private:
  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r' || s_[pos_] == '\n')) {
      if (s_[pos_] == '\n') ++line_;
      ++pos_;
    }
  }

  std::string string_token() {
    std::string out;
    ++pos_;
    while (s_[pos_] != '"') {
      if (s_[pos_] == '\\') out += s_[pos_++];
      out += s_[pos_++];
    }
    ++pos_;
    return out;
  }

  static std::string escape(const std::string& key) {
    std::string out;
    for (char c : key) {
      if (c == '~')
        out += "~0";
      else if (c == '/')
        out += "~1";
      else
        out += c;
    }
    return out;
  }

  void value(const std::string& ptr) {
    lines_[ptr] = line_;
    const char c = s_[pos_];
    if (c == '{') {
      ++pos_;
      skip_ws();
      while (s_[pos_] != '}') {
        const std::string key = string_token();
        skip_ws();
        ++pos_;  // ':'
        skip_ws();
        value(ptr + "/" + escape(key));
        skip_ws();
        if (s_[pos_] == ',') ++pos_;
        skip_ws();
      }
      ++pos_;
    } else if (c == '[') {
      ++pos_;
      skip_ws();
      for (int i = 0; s_[pos_] != ']'; ++i) {
        value(ptr + "/" + std::to_string(i));
        skip_ws();
        if (s_[pos_] == ',') ++pos_;
        skip_ws();
      }
      ++pos_;
    } else if (c == '"') {
      string_token();
    } else {
      while (pos_ < s_.size() && std::string_view(",]} \t\r\n").find(s_[pos_]) == std::string_view::npos) ++pos_;
    }
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  int line_ = 1;
  std::map<std::string, int> lines_;
};

std::string dotted(const std::string& pointer) {
  std::string out;
  std::size_t start = 1;
  while (start <= pointer.size() && !pointer.empty()) {
    auto end = pointer.find('/', start);
    std::string part = pointer.substr(start, end - start);
    if (!part.empty() && std::all_of(part.begin(), part.end(), ::isdigit))
      out += "[" + part + "]";
    else
      out += (out.empty() ? "" : ".") + part;
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out.empty() ? "<root>" : out;
}

class Reader {
 public:
  Reader(const std::string& text, std::string name) : name_(std::move(name)), index_(text) {}

  [[noreturn]] void fail(const std::string& pointer, const std::string& msg) const {
    throw ConfigError(name_ + ":" + std::to_string(index_.line_of(pointer)) + ": field '" + dotted(pointer) + "' " + msg);
  }

  void allow_only(const json& obj, const std::string& ptr, std::initializer_list<const char*> keys) const {
    if (!obj.is_object()) fail(ptr, "must be an object");
    for (const auto& [k, v] : obj.items()) {
      bool ok = false;
      for (const char* a : keys) ok = ok || k == a;
      if (!ok) fail(ptr + "/" + k, "is not a recognised setting");
    }
  }

  const json* find(const json& obj, const std::string& ptr, const char* key, bool required) const {
    if (obj.contains(key)) return &obj.at(key);
    if (required) fail(ptr + "/" + key, "is required");
    return nullptr;
  }

  long long integer(const json& v, const std::string& ptr, long long lo, long long hi) const {
    if (!v.is_number_integer()) fail(ptr, "must be an integer");
    if (v.is_number_unsigned() && v.get<unsigned long long>() > static_cast<unsigned long long>(hi))
      fail(ptr, "must be at most " + std::to_string(hi));
    const long long x = v.get<long long>();
    if (x < lo || x > hi) fail(ptr, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "], got " + v.dump());
    return x;
  }

  std::uint64_t seed(const json& v, const std::string& ptr) const {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      fail(ptr, "must be a non-negative integer");
    return v.get<std::uint64_t>();
  }

  double number(const json& v, const std::string& ptr) const {
    if (!v.is_number()) fail(ptr, "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(ptr, "must be finite");
    return x;
  }

  // Open or closed bounds per flag.
  double number_in(const json& v, const std::string& ptr, double lo, bool lo_open, double hi, bool hi_open) const {
    const double x = number(v, ptr);
    const bool ok = (lo_open ? x > lo : x >= lo) && (hi_open ? x < hi : x <= hi);
    if (!ok) {
      std::ostringstream os;
      os << "must lie in " << (lo_open ? "(" : "[") << lo << ", " << hi << (hi_open ? ")" : "]") << ", got " << v.dump();
      fail(ptr, os.str());
    }
    return x;
  }

  std::string string(const json& v, const std::string& ptr) const {
    if (!v.is_string()) fail(ptr, "must be a string");
    return v.get<std::string>();
  }

  int even_grid(const json& v, const std::string& ptr) const {
    const auto K = static_cast<int>(integer(v, ptr, 16, 1 << 24));
    if (K % 2 != 0) fail(ptr, "must be even, got " + std::to_string(K));
    return K;
  }

 private:
  std::string name_;
  LineIndex index_;
};

Op scaled(const Op& op, double scale) { return scale == 1.0 ? op : scale * op; }

Op build_operator(const Reader& r, const json& spec, const std::string& ptr, const GridPtr& g) {
  r.allow_only(spec, ptr, {"kind", "scale", "length_scale", "mode", "rank", "trace", "opnorm", "seed"});
  const std::string kind = r.string(*r.find(spec, ptr, "kind", true), ptr + "/kind");
  const double scale = spec.contains("scale") ? r.number(spec.at("scale"), ptr + "/scale") : 1.0;
  const int n = g->size();
  auto get_seed = [&] { return spec.contains("seed") ? r.seed(spec.at("seed"), ptr + "/seed") : 0; };
  const auto& tau = g->points();

  if (kind == "identity") return scaled(Op::identity(g), scale);
  if (kind == "zero") return Op::zero(g);
  if (kind == "brownian") {
    Eigen::MatrixXcd k(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) k(i, j) = std::min(tau[i], tau[j]);
    return scaled(Op::from_kernel(g, k), scale);
  }
  if (kind == "gaussian_kernel") {
    const double ell = spec.contains("length_scale")
                           ? r.number_in(spec.at("length_scale"), ptr + "/length_scale", 0, true, INFINITY, true)
                           : 0.2;
    Eigen::MatrixXcd k(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) k(i, j) = std::exp(-0.5 * std::pow((tau[i] - tau[j]) / ell, 2));
    return scaled(Op::from_kernel(g, k), scale);
  }
  if (kind == "rank_one") {
    const int mode = spec.contains("mode") ? static_cast<int>(r.integer(spec.at("mode"), ptr + "/mode", 1, 1 << 20)) : 1;
    auto phi = Func::sample(g, [mode](double t) { return std::sin(mode * std::numbers::pi * t); });
    const double nrm = norm(phi);
    if (nrm == 0.0) r.fail(ptr + "/mode", "gives a function that vanishes on the grid");
    phi = Func(g, Eigen::VectorXcd(phi.values() / nrm));
    return scaled(tensor(phi, phi), scale);
  }
  if (kind == "random_psd") {
    const int rank = spec.contains("rank") ? static_cast<int>(r.integer(spec.at("rank"), ptr + "/rank", 1, n)) : n;
    const double trace =
        spec.contains("trace") ? r.number_in(spec.at("trace"), ptr + "/trace", 0, true, INFINITY, true) : 1.0;
    auto rng = stream_rng(get_seed(), 0x0B5, 0);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd b(n, rank);
    for (int j = 0; j < rank; ++j)
      for (int i = 0; i < n; ++i) b(i, j) = nd(rng);
    Eigen::MatrixXd c = b * b.transpose();
    c *= trace / c.trace();
    return scaled(Op::trusted_psd(g, c.cast<cplx>()), scale);
  }
  if (kind == "random") {
    const double opnorm =
        spec.contains("opnorm") ? r.number_in(spec.at("opnorm"), ptr + "/opnorm", 0, true, INFINITY, true) : 1.0;
    auto rng = stream_rng(get_seed(), 0x0B6, 0);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd m(n, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) m(i, j) = nd(rng);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    m *= opnorm / svd.singularValues()(0);
    return scaled(Op::from_coords(g, m.cast<cplx>()), scale);
  }
  r.fail(ptr + "/kind",
         "must be one of identity, zero, brownian, gaussian_kernel, rank_one, random_psd, random; got \"" + kind + "\"");
}

ModelSpec build_model(const Reader& r, const json& m, const GridPtr& g) {
  const std::string p = "/model";
  r.allow_only(m, p, {"type", "sigma", "theta", "d", "truncation", "atoms", "real_output"});
  const std::string type = r.string(*r.find(m, p, "type", true), p + "/type");
  const bool real = m.contains("real_output") ? [&] {
    if (!m.at("real_output").is_boolean()) r.fail(p + "/real_output", "must be true or false");
    return m.at("real_output").get<bool>();
  }()
                                              : true;

  auto sigma = [&] { return build_operator(r, *r.find(m, p, "sigma", true), p + "/sigma", g); };
  auto check_psd = [&](const Op& op, const std::string& ptr) {
    Op c = op;
    if (!c.is_hermitian() || !c.certify_psd()) r.fail(ptr, "must describe a positive semi-definite operator");
  };

  auto guarded = [&](auto&& make) -> ModelSpec {
    try {
      return make();
    } catch (const DomainError& e) {
      r.fail(p, std::string("is inconsistent: ") + e.what());
    }
  };

  ModelSpec spec;
  if (type == "white_noise") {
    Op s = sigma();
    check_psd(s, p + "/sigma");
    spec = guarded([&] { return ModelSpec::white_noise(s, real); });
  } else if (type == "linear_ma" || type == "fma1") {
    Op s = sigma();
    check_psd(s, p + "/sigma");
    const json& th = *r.find(m, p, "theta", true);
    std::vector<Op> theta;
    if (th.is_array()) {
      if (th.empty()) r.fail(p + "/theta", "must not be empty");
      for (std::size_t j = 0; j < th.size(); ++j) theta.push_back(build_operator(r, th[j], p + "/theta/" + std::to_string(j), g));
    } else {
      theta.push_back(build_operator(r, th, p + "/theta", g));
    }
    if (type == "fma1") {
      if (theta.size() != 1) r.fail(p + "/theta", "must be a single operator for fma1");
      spec = guarded([&] { return ModelSpec::fma1(s, theta[0], real); });
    } else {
      spec = guarded([&] { return ModelSpec::linear_ma(s, theta, real); });
    }
  } else if (type == "long_memory") {
    Op s = sigma();
    check_psd(s, p + "/sigma");
    const double d = r.number_in(*r.find(m, p, "d", true), p + "/d", 0.0, true, 0.5, true);
    const int trunc = m.contains("truncation") ? static_cast<int>(r.integer(m.at("truncation"), p + "/truncation", 1, 1 << 24)) : 1000;
    spec = guarded([&] { return ModelSpec::long_memory(s, d, trunc, real); });
  } else if (type == "atoms_only") {
    if (!m.contains("atoms")) r.fail(p + "/atoms", "is required for atoms_only models");
    spec = guarded([&] { return ModelSpec::atoms_only(g, {}, real); });
  } else {
    r.fail(p + "/type", "must be one of white_noise, linear_ma, fma1, long_memory, atoms_only; got \"" + type + "\"");
  }
  if (type != "atoms_only") {
    for (const char* key : {"theta", "d", "truncation"}) {
      const bool used = (type == "linear_ma" || type == "fma1") ? std::string(key) == "theta"
                                                                : type == "long_memory" && std::string(key) != "theta";
      if (m.contains(key) && !used) r.fail(p + "/" + key, "does not apply to " + type + " models");
    }
  } else {
    for (const char* key : {"sigma", "theta", "d", "truncation"})
      if (m.contains(key)) r.fail(p + "/" + key, "does not apply to atoms_only models");
  }

  if (m.contains("atoms")) {
    const json& atoms = m.at("atoms");
    if (!atoms.is_array()) r.fail(p + "/atoms", "must be an array");
    for (std::size_t l = 0; l < atoms.size(); ++l) {
      const std::string ap = p + "/atoms/" + std::to_string(l);
      r.allow_only(atoms[l], ap, {"frequency", "amplitude"});
      const double lo = real ? 0.0 : -std::numbers::pi;
      const double w = r.number_in(*r.find(atoms[l], ap, "frequency", true), ap + "/frequency", lo, !real, std::numbers::pi, false);
      Op amp = build_operator(r, *r.find(atoms[l], ap, "amplitude", true), ap + "/amplitude", g);
      check_psd(amp, ap + "/amplitude");
      spec.atoms.push_back({w, amp});
    }
  }
  try {
    spec.validate();
  } catch (const DomainError& e) {
    r.fail(p, std::string("is inconsistent: ") + e.what());
  }
  return spec;
}

}  // namespace

const char* config_schema() { return kRunConfigSchema; }

RunConfig parse_config(const std::string& text, const std::string& name) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    int line = 1;
    for (std::size_t i = 0; i < std::min(e.byte, text.size() + 1) - (e.byte > 0 ? 1 : 0); ++i)
      if (text[i] == '\n') ++line;
    throw ConfigError(name + ":" + std::to_string(line) + ": invalid JSON: " + e.what());
  }
  Reader r(text, name);
  RunConfig cfg;
  r.allow_only(doc, "", {"schema_version", "grid", "model", "simulation", "spectral", "roundtrip", "detection", "hfpca", "output"});

  const json& ver = *r.find(doc, "", "schema_version", true);
  if (!ver.is_number_integer() || ver.get<long long>() != RunConfig::kSchemaVersion)
    r.fail("/schema_version", "must be " + std::to_string(RunConfig::kSchemaVersion) + ", got " + ver.dump());

  const json& grid = *r.find(doc, "", "grid", true);
  r.allow_only(grid, "/grid", {"n", "rule"});
  const int n = static_cast<int>(r.integer(*r.find(grid, "/grid", "n", true), "/grid/n", 2, 4096));
  Quadrature rule = Quadrature::trapezoid;
  if (grid.contains("rule")) {
    try {
      rule = parse_quadrature(r.string(grid.at("rule"), "/grid/rule"));
    } catch (const DomainError&) {
      r.fail("/grid/rule", "must be one of trapezoid, midpoint, gauss_legendre; got " + grid.at("rule").dump());
    }
  }
  cfg.grid = Grid::make(n, rule);

  if (doc.contains("model")) cfg.model = build_model(r, doc.at("model"), cfg.grid);

  if (doc.contains("simulation")) {
    const json& s = doc.at("simulation");
    r.allow_only(s, "/simulation", {"T", "K", "seed"});
    if (s.contains("T")) cfg.T = static_cast<int>(r.integer(s.at("T"), "/simulation/T", 1, 1 << 24));
    if (s.contains("K")) cfg.K = r.even_grid(s.at("K"), "/simulation/K");
    if (s.contains("seed")) cfg.seed = r.seed(s.at("seed"), "/simulation/seed");
  }
  if (doc.contains("spectral")) {
    const json& s = doc.at("spectral");
    r.allow_only(s, "/spectral", {"window", "q", "K"});
    if (s.contains("window")) {
      try {
        cfg.window = parse_window(r.string(s.at("window"), "/spectral/window"));
      } catch (const DomainError&) {
        r.fail("/spectral/window", "must be one of fejer, bartlett, parzen; got " + s.at("window").dump());
      }
    }
    if (s.contains("q")) cfg.q = static_cast<int>(r.integer(s.at("q"), "/spectral/q", 1, 1 << 20));
    if (s.contains("K")) cfg.spectral_K = static_cast<int>(r.integer(s.at("K"), "/spectral/K", 4, 1 << 24));
    if (cfg.q && cfg.spectral_K && *cfg.spectral_K < 2 * *cfg.q + 2)
      r.fail("/spectral/K", "must be at least 2q+2 = " + std::to_string(2 * *cfg.q + 2));
  }
  if (doc.contains("roundtrip")) {
    const json& s = doc.at("roundtrip");
    r.allow_only(s, "/roundtrip", {"max_lag", "tol", "analytic_K"});
    if (s.contains("max_lag")) cfg.max_lag = static_cast<int>(r.integer(s.at("max_lag"), "/roundtrip/max_lag", 0, 1 << 20));
    if (s.contains("tol")) cfg.tol = r.number_in(s.at("tol"), "/roundtrip/tol", 0, true, INFINITY, true);
    if (s.contains("analytic_K")) cfg.analytic_K = r.even_grid(s.at("analytic_K"), "/roundtrip/analytic_K");
  }
  if (doc.contains("detection")) {
    const json& s = doc.at("detection");
    r.allow_only(s, "/detection", {"alpha", "m"});
    if (s.contains("alpha")) cfg.detect_alpha = r.number_in(s.at("alpha"), "/detection/alpha", 0, true, 1, true);
    if (s.contains("m")) cfg.detect_m = static_cast<int>(r.integer(s.at("m"), "/detection/m", 1, 1 << 20));
  }
  if (doc.contains("hfpca")) {
    const json& s = doc.at("hfpca");
    r.allow_only(s, "/hfpca", {"rank", "pole_handling", "K"});
    if (s.contains("rank")) {
      const json& rk = s.at("rank");
      r.allow_only(rk, "/hfpca/rank", {"fixed", "fraction"});
      if (rk.contains("fixed") == rk.contains("fraction")) r.fail("/hfpca/rank", "must set exactly one of fixed, fraction");
      if (rk.contains("fixed")) cfg.rank.fixed = static_cast<int>(r.integer(rk.at("fixed"), "/hfpca/rank/fixed", 0, 1 << 20));
      if (rk.contains("fraction"))
        cfg.rank.fraction = r.number_in(rk.at("fraction"), "/hfpca/rank/fraction", 0, true, 1, false);
    }
    if (s.contains("pole_handling")) {
      const std::string ph = r.string(s.at("pole_handling"), "/hfpca/pole_handling");
      if (ph == "neighbor_mean")
        cfg.pole = PoleHandling::neighbor_mean;
      else if (ph == "exclude")
        cfg.pole = PoleHandling::exclude;
      else
        r.fail("/hfpca/pole_handling", "must be neighbor_mean or exclude; got \"" + ph + "\"");
    }
    if (s.contains("K")) cfg.hfpca_K = r.even_grid(s.at("K"), "/hfpca/K");
  }
  if (!cfg.rank.fixed && !cfg.rank.fraction) cfg.rank.fraction = 0.9;
  if (doc.contains("output")) {
    const json& s = doc.at("output");
    r.allow_only(s, "/output", {"dir"});
    if (s.contains("dir")) {
      const std::string dir = r.string(s.at("dir"), "/output/dir");
      if (dir.empty()) r.fail("/output/dir", "must not be empty");
      cfg.out_dir = dir;
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig cfg = parse_config(ss.str(), path.string());
  cfg.source = path;
  if (cfg.out_dir && cfg.out_dir->is_relative()) cfg.out_dir = path.parent_path() / *cfg.out_dir;
  return cfg;
}

}  // namespace funspec

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include <json.hpp>

#include "cli_support.hpp"
#include "funspec/config.hpp"
#include "funspec/errors.hpp"
#include "funspec/io.hpp"
#include "support.hpp"

using namespace funspec;
using namespace funspec::testing;

namespace {

bool same_bits(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return std::memcmp(a.data(), b.data(), sizeof(cplx) * static_cast<std::size_t>(a.size())) == 0;
}

std::string error_of(const std::string& text) {
  try {
    parse_config(text, "cfg.json");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("series CSV round trip is bit-exact") {
  TempDir dir("io");
  std::mt19937_64 rng(1);
  for (auto rule : {Quadrature::trapezoid, Quadrature::midpoint, Quadrature::gauss_legendre}) {
    auto g = Grid::make(7, rule);
    Eigen::MatrixXd x = random_real(rng, 7).topRows(5);
    x(0, 0) = 0.1 + 0.2;
    x(1, 1) = std::numeric_limits<double>::denorm_min();
    x(2, 2) = -0.0;
    x(3, 3) = 1e300;
    FuncSeries s(g, x);
    io::write_series(dir / "s.csv", s);
    auto back = io::read_series(dir / "s.csv");
    CHECK(*back.grid() == *g);
    CHECK(same_bits(back.frames(), s.frames()));
    CHECK(back.is_real());
    CHECK(std::signbit(back.frames()(2, 2).real()));
  }
  // Without a sidecar the grid defaults to trapezoid.
  fs::remove(dir / "s.grid.json");
  CHECK(io::read_series(dir / "s.csv").grid()->rule() == Quadrature::trapezoid);
  CHECK_THROWS_AS(io::write_series_csv(dir / "c.csv", FuncSeries(Grid::make(3), Eigen::MatrixXcd::Constant(2, 3, cplx(0, 1)), false)),
                  DomainError);
}

TEST_CASE("series CSV errors") {
  TempDir dir("io");
  CHECK_THROWS_AS(io::read_series(dir.write("empty.csv", "")), io::IoError);
  CHECK_THROWS_AS(io::read_series(dir.write("head.csv", "t,tau_0,tau_1\n")), io::IoError);
  CHECK_THROWS_AS(io::read_series(dir.write("bad.csv", "t,tau_0,tau_2\n0,1,2\n")), io::IoError);
  CHECK_THROWS_AS(io::read_series(dir.write("short.csv", "t,tau_0,tau_1\n0,1\n")), io::IoError);
  CHECK_THROWS_AS(io::read_series(dir.write("nan.csv", "t,tau_0,tau_1\n0,1,x\n")), io::IoError);
  CHECK_THROWS_AS(io::read_series(dir.write("order.csv", "t,tau_0,tau_1\n1,1,2\n")), io::IoError);
  CHECK_THROWS_AS(io::read_series(dir / "missing.csv"), io::IoError);
  auto ok = io::read_series(dir.write("ok.csv", "t,tau_0,tau_1\n0,1,2\n1,3,4\n"));
  CHECK(ok.length() == 2);
  CHECK(ok.frames()(1, 0) == cplx(3, 0));
}

TEST_CASE("complex series and measure round trips are bit-exact") {
  TempDir dir("io");
  std::mt19937_64 rng(2);
  auto g = Grid::make(6, Quadrature::gauss_legendre);
  Eigen::MatrixXcd frames = random_complex(rng, 6).topRows(4);
  FuncSeries s(g, frames, false);
  io::write_series(dir / "z.json", s);
  auto zs = io::read_series(dir / "z.json");
  CHECK(same_bits(zs.frames(), frames));
  CHECK_FALSE(zs.is_real());

  auto f = make_fma1(6, 3);
  ModelSpec m = f.model;
  m.atoms = {{std::numbers::pi / 2, random_psd(f.grid, rng, 2)}};
  auto sm = model_spectral_measure(m, 32);
  io::write_measure(dir / "m.json", sm);
  auto back = io::read_measure(dir / "m.json");
  REQUIRE(back.num_freqs() == sm.num_freqs());
  CHECK(*back.grid() == *sm.grid());
  CHECK(back.is_real_process());
  for (int k = 0; k < 32; ++k) CHECK(same_bits(back.density(k).coords(), sm.density(k).coords()));
  REQUIRE(back.atoms().size() == 2);
  for (std::size_t l = 0; l < 2; ++l) {
    CHECK(back.atoms()[l].frequency == sm.atoms()[l].frequency);
    CHECK(same_bits(back.atoms()[l].jump.coords(), sm.atoms()[l].jump.coords()));
  }

  auto lm = model_spectral_measure(ModelSpec::long_memory(f.sigma, 0.2), 32);
  io::write_measure(dir / "lm.json", lm);
  CHECK(io::read_measure(dir / "lm.json").flagged_cells() == lm.flagged_cells());

  auto eig = eigendecompose_measure(sm);
  io::write_eigens(dir / "e.json", eig);
  auto eb = io::read_eigens(dir / "e.json");
  REQUIRE(eb.num_freqs() == eig.num_freqs());
  for (int k = 0; k < eig.num_freqs(); ++k) {
    CHECK((eb.densities[k].eigenvalues.array() == eig.densities[k].eigenvalues.array()).all());
    CHECK(same_bits(eb.densities[k].vectors, eig.densities[k].vectors));
    CHECK(eb.densities[k].source_trace == eig.densities[k].source_trace);
  }
  CHECK(eb.atom_frequencies == eig.atom_frequencies);

  // Sidecars are little-endian float64: the first density entry is readable by hand.
  const std::string raw = slurp(dir / "m.densities.re.bin");
  REQUIRE(raw.size() == 32u * 36u * 8u);
  std::uint64_t bits = 0;
  for (int b = 7; b >= 0; --b) bits = (bits << 8) | static_cast<unsigned char>(raw[static_cast<std::size_t>(b)]);
  CHECK(std::bit_cast<double>(bits) == sm.density(0).coords()(0, 0).real());

  // Truncated payloads are rejected.
  std::ofstream(dir / "m.densities.im.bin", std::ios::binary | std::ios::trunc) << "abc";
  CHECK_THROWS_AS(io::read_measure(dir / "m.json"), io::IoError);
}

TEST_CASE("format_double round trips") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::uint64_t> u;
  for (int i = 0; i < 10000; ++i) {
    const double v = std::bit_cast<double>(u(rng));
    if (!std::isfinite(v)) continue;
    CHECK(std::strtod(io::format_double(v).c_str(), nullptr) == v);
  }
}

TEST_CASE("config parsing") {
  const std::string good = R"({
  "schema_version": 1,
  "grid": {"n": 8, "rule": "midpoint"},
  "model": {
    "type": "fma1",
    "sigma": {"kind": "random_psd", "rank": 3, "trace": 2.0, "seed": 5},
    "theta": {"kind": "random", "opnorm": 0.5, "seed": 6}
  },
  "simulation": {"T": 100, "K": 256, "seed": 18446744073709551615},
  "spectral": {"window": "parzen", "q": 10, "K": 64},
  "hfpca": {"rank": {"fraction": 0.8}, "pole_handling": "exclude"},
  "output": {"dir": "out"}
})";
  auto cfg = parse_config(good, "cfg.json");
  CHECK(cfg.grid->size() == 8);
  CHECK(cfg.grid->rule() == Quadrature::midpoint);
  REQUIRE(cfg.model.has_value());
  const auto& ma = std::get<LinearMA>(cfg.model->continuous);
  CHECK(ma.sigma.trace().real() == doctest::Approx(2.0));
  CHECK(ma.theta.size() == 2);
  CHECK(norms(ma.theta[1]).op_norm == doctest::Approx(0.5));
  CHECK(cfg.T == 100);
  CHECK(cfg.synthesis_size() == 256);
  CHECK(cfg.seed == 18446744073709551615ull);
  CHECK(cfg.window == Window::parzen);
  CHECK(*cfg.rank.fraction == 0.8);
  CHECK(cfg.pole == PoleHandling::exclude);

  // Operators from seeds are reproducible.
  auto again = parse_config(good, "cfg.json");
  CHECK((std::get<LinearMA>(again.model->continuous).sigma.coords().array() == ma.sigma.coords().array()).all());

  auto minimal = parse_config(R"({"schema_version": 1, "grid": {"n": 4}})", "m.json");
  CHECK_FALSE(minimal.model.has_value());
  CHECK(minimal.synthesis_size() == default_synthesis_size(1024));
  CHECK(*minimal.rank.fraction == 0.9);
}

TEST_CASE("config errors name the field and the line") {
  CHECK(error_of("{\"schema_version\": 1,\n\"grid\": {\"n\": 8},\n\"model\": {\"type\": \"long_memory\",\n\"sigma\": {\"kind\": \"identity\"},\n\"d\": 0.7}}") ==
        "cfg.json:5: field 'model.d' must lie in (0, 0.5), got 0.7");
  CHECK(error_of("{\"schema_version\": 2, \"grid\": {\"n\": 8}}").find("cfg.json:1: field 'schema_version'") == 0);
  CHECK(error_of("{\"grid\": {\"n\": 8}}").find("field 'schema_version' is required") != std::string::npos);
  CHECK(error_of("{\"schema_version\": 1,\n\"grid\": {\"n\": 1}}").find("cfg.json:2: field 'grid.n'") == 0);
  CHECK(error_of("{\"schema_version\": 1,\n\"grid\": {\"n\": 8},\n\"extra\": 3}").find("cfg.json:3: field 'extra' is not a recognised") == 0);
  CHECK(error_of("{\"schema_version\": 1, \"grid\": {\"n\": 8},\n\"model\": {\"type\": \"white_noise\",\n \"sigma\": {\"kind\": \"nope\"}}}")
            .find("cfg.json:3: field 'model.sigma.kind' must be one of") == 0);
  CHECK(error_of("{\"schema_version\": 1, \"grid\": {\"n\": 8},\n\"model\": {\"type\": \"atoms_only\", \"atoms\": [\n{\"frequency\": 1.0, \"amplitude\": {\"kind\": \"identity\"}},\n{\"frequency\": -1.0, \"amplitude\": {\"kind\": \"identity\"}}]}}")
            .find("cfg.json:4: field 'model.atoms[1].frequency'") == 0);
  CHECK(error_of("{\"schema_version\": 1, \"grid\": {\"n\": 8},\n\"model\": {\"type\": \"white_noise\", \"sigma\": {\"kind\": \"identity\", \"scale\": -1}}}")
            .find("field 'model.sigma' must describe a positive semi-definite operator") != std::string::npos);
  CHECK(error_of("{\"schema_version\": 1, \"grid\": {\"n\": 8},\n\"simulation\": {\"K\": 33}}").find("cfg.json:2: field 'simulation.K' must be even") == 0);
  CHECK(error_of("{\"schema_version\": 1, \"grid\": {\"n\": 8},\n\"spectral\": {\"q\": 10, \"K\": 12}}").find("field 'spectral.K'") != std::string::npos);
  CHECK(error_of("{\"schema_version\": 1, \"grid\": {\"n\": 8}, \"hfpca\": {\"rank\": {}}}").find("field 'hfpca.rank' must set exactly one") != std::string::npos);
  CHECK(error_of("{\"schema_version\": 1,\n \"grid\": {\"n\": 8,}}").find("cfg.json:2: invalid JSON") == 0);
  CHECK(error_of("{\"schema_version\": 1, \"grid\": {\"n\": 8}, \"model\": {\"type\": \"white_noise\", \"sigma\": {\"kind\": \"identity\"}, \"d\": 0.2}}")
            .find("field 'model.d' does not apply") != std::string::npos);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("published schema matches the embedded copy") {
  const auto schema = nlohmann::json::parse(config_schema());
  CHECK(schema["properties"]["schema_version"]["const"] == RunConfig::kSchemaVersion);
  CHECK(schema["properties"]["model"]["properties"]["d"]["exclusiveMaximum"] == 0.5);
}

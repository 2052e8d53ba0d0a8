#include "funspec/io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "funspec/errors.hpp"

namespace funspec::io {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

std::ofstream open_out(const fs::path& p, std::ios::openmode mode = std::ios::out) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, mode);
  if (!out) throw IoError("cannot open " + p.string() + " for writing");
  return out;
}

std::ifstream open_in(const fs::path& p, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(p, mode);
  if (!in) throw IoError("cannot open " + p.string());
  return in;
}

json read_json(const fs::path& p) {
  auto in = open_in(p);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError(p.string() + ": " + e.what());
  }
}

void write_json(const fs::path& p, const json& j) {
  auto out = open_out(p);
  out << j.dump(2) << '\n';
}

template <typename T>
T field(const json& j, const char* key, const fs::path& where) {
  if (!j.contains(key)) throw IoError(where.string() + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw IoError(where.string() + ": field '" + key + "' has the wrong type");
  }
}

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(v);
  return v;
}

void write_plane(const fs::path& p, const std::vector<double>& data) {
  auto out = open_out(p, std::ios::binary);
  for (double d : data) {
    const std::uint64_t bits = to_le(std::bit_cast<std::uint64_t>(d));
    char buf[8];
    std::memcpy(buf, &bits, 8);
    out.write(buf, 8);
  }
  if (!out) throw IoError("write failed: " + p.string());
}

std::vector<double> read_plane(const fs::path& p, std::size_t count) {
  auto in = open_in(p, std::ios::binary);
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  if (size != count * 8)
    throw IoError(p.string() + ": expected " + std::to_string(count * 8) + " bytes, found " + std::to_string(size));
  in.seekg(0);
  std::vector<double> out(count);
  for (auto& d : out) {
    char buf[8];
    in.read(buf, 8);
    std::uint64_t bits;
    std::memcpy(&bits, buf, 8);
    d = std::bit_cast<double>(to_le(bits));
  }
  return out;
}

// A stack of equally shaped complex matrices stored as two planes.
struct Planes {
  std::vector<double> re, im;
  void push(const Eigen::MatrixXcd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        re.push_back(m(i, j).real());
        im.push_back(m(i, j).imag());
      }
  }
};

json write_planes(const fs::path& manifest, const std::string& name, const Planes& planes,
                  std::vector<std::size_t> shape) {
  const std::string stem = manifest.stem().string() + "." + name;
  write_plane(manifest.parent_path() / (stem + ".re.bin"), planes.re);
  write_plane(manifest.parent_path() / (stem + ".im.bin"), planes.im);
  return json{{"shape", shape}, {"re", stem + ".re.bin"}, {"im", stem + ".im.bin"}};
}

// Reads `count` matrices of size rows x cols.
std::vector<Eigen::MatrixXcd> read_planes(const fs::path& manifest, const json& entry, std::size_t count,
                                          Eigen::Index rows, Eigen::Index cols) {
  const auto shape = field<std::vector<std::size_t>>(entry, "shape", manifest);
  const std::vector<std::size_t> want{count, static_cast<std::size_t>(rows), static_cast<std::size_t>(cols)};
  if (shape != want) throw IoError(manifest.string() + ": array shape does not match the manifest");
  const std::size_t n = count * static_cast<std::size_t>(rows * cols);
  const auto re = read_plane(manifest.parent_path() / field<std::string>(entry, "re", manifest), n);
  const auto im = read_plane(manifest.parent_path() / field<std::string>(entry, "im", manifest), n);
  std::vector<Eigen::MatrixXcd> out;
  std::size_t pos = 0;
  for (std::size_t s = 0; s < count; ++s) {
    Eigen::MatrixXcd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j, ++pos) m(i, j) = {re[pos], im[pos]};
    out.push_back(std::move(m));
  }
  return out;
}

json grid_json(const Grid& g) {
  return json{{"n", g.size()}, {"rule", to_string(g.rule())}, {"points", g.points()}, {"weights", g.weights()}};
}

GridPtr grid_from_json(const json& j, const fs::path& where) {
  const auto p = field<std::vector<double>>(j, "points", where);
  const auto w = field<std::vector<double>>(j, "weights", where);
  if (p.size() != w.size() || static_cast<int>(p.size()) != field<int>(j, "n", where))
    throw IoError(where.string() + ": grid sizes disagree");
  Quadrature rule;
  try {
    rule = parse_quadrature(field<std::string>(j, "rule", where));
  } catch (const DomainError& e) {
    throw IoError(where.string() + ": " + e.what());
  }
  try {
    return std::make_shared<const Grid>(p, w, rule);
  } catch (const DomainError& e) {
    throw IoError(where.string() + ": " + e.what());
  }
}

void check_header(const json& j, const char* format, const fs::path& where) {
  if (field<std::string>(j, "format", where) != format)
    throw IoError(where.string() + ": not a " + std::string(format) + " file");
  if (field<int>(j, "version", where) != kFormatVersion) throw IoError(where.string() + ": unsupported version");
  if (field<std::string>(j, "byte_order", where) != "little") throw IoError(where.string() + ": unsupported byte order");
}

json header(const char* format) { return json{{"format", format}, {"version", kFormatVersion}, {"byte_order", "little"}}; }

fs::path grid_sidecar(const fs::path& csv) {
  fs::path p = csv;
  p.replace_extension(".grid.json");
  return p;
}

double parse_double(std::string_view s, const fs::path& where, std::size_t line) {
  double v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw IoError(where.string() + ":" + std::to_string(line) + ": cannot parse '" + std::string(s) + "' as a number");
  return v;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_series_csv(const fs::path& path, const FuncSeries& series) {
  if (!series.is_real()) throw DomainError("write_series_csv: series is complex; use the binary format");
  const auto& x = series.frames();
  const int N = static_cast<int>(x.cols());
  {
    auto out = open_out(path);
    std::string line = "t";
    for (int i = 0; i < N; ++i) line += ",tau_" + std::to_string(i);
    out << line << '\n';
    for (int t = 0; t < series.length(); ++t) {
      line = std::to_string(t);
      for (int i = 0; i < N; ++i) {
        line += ',';
        line += format_double(x(t, i).real());
      }
      out << line << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
  }
  write_json(grid_sidecar(path), grid_json(*series.grid()));
}

FuncSeries read_series_csv(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line.empty()) throw IoError(path.string() + ": empty file");
  const auto head = split(line);
  const int N = static_cast<int>(head.size()) - 1;
  if (N < 1 || head[0] != "t") throw IoError(path.string() + ":1: header must be t,tau_0,...,tau_{N-1}");
  for (int i = 0; i < N; ++i)
    if (head[static_cast<std::size_t>(i) + 1] != "tau_" + std::to_string(i))
      throw IoError(path.string() + ":1: header must be t,tau_0,...,tau_{N-1}");

  std::vector<double> values;
  std::size_t lineno = 1;
  int T = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (static_cast<int>(cells.size()) != N + 1)
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(N + 1) + " fields");
    if (parse_double(cells[0], path, lineno) != T)
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": time index out of sequence");
    for (int i = 1; i <= N; ++i) values.push_back(parse_double(cells[static_cast<std::size_t>(i)], path, lineno));
    ++T;
  }
  if (T == 0) throw IoError(path.string() + ": no frames");

  const fs::path side = grid_sidecar(path);
  GridPtr g = fs::exists(side) ? grid_from_json(read_json(side), side) : Grid::make(N);
  if (g->size() != N) throw IoError(side.string() + ": grid size does not match the series");
  Eigen::MatrixXd x = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(values.data(), T, N);
  return FuncSeries(g, x);
}

void write_series_binary(const fs::path& manifest, const FuncSeries& series) {
  json j = header("funspec.series");
  j["grid"] = grid_json(*series.grid());
  j["length"] = series.length();
  j["real"] = series.is_real();
  Planes planes;
  planes.push(series.frames());
  j["frames"] = write_planes(manifest, "frames", planes,
                             {1, static_cast<std::size_t>(series.length()), static_cast<std::size_t>(series.grid()->size())});
  write_json(manifest, j);
}

FuncSeries read_series_binary(const fs::path& manifest) {
  const json j = read_json(manifest);
  check_header(j, "funspec.series", manifest);
  auto g = grid_from_json(field<json>(j, "grid", manifest), manifest);
  const int T = field<int>(j, "length", manifest);
  if (T < 1) throw IoError(manifest.string() + ": no frames");
  auto frames = read_planes(manifest, field<json>(j, "frames", manifest), 1, T, g->size());
  try {
    return FuncSeries(g, frames[0], field<bool>(j, "real", manifest));
  } catch (const DomainError& e) {
    throw IoError(manifest.string() + ": " + e.what());
  }
}

void write_series(const fs::path& path, const FuncSeries& series) {
  if (path.extension() == ".csv")
    write_series_csv(path, series);
  else
    write_series_binary(path, series);
}

FuncSeries read_series(const fs::path& path) {
  if (path.extension() == ".csv") return read_series_csv(path);
  return read_series_binary(path);
}

void write_measure(const fs::path& manifest, const SpectralMeasure& sm) {
  const int K = sm.num_freqs();
  const auto N = static_cast<std::size_t>(sm.grid()->size());
  json j = header("funspec.measure");
  j["grid"] = grid_json(*sm.grid());
  j["num_freqs"] = K;
  j["delta"] = sm.delta();
  std::vector<double> freqs;
  for (int k = 0; k < K; ++k) freqs.push_back(sm.frequency(k));
  j["frequencies"] = freqs;
  j["real_process"] = sm.is_real_process();
  j["flagged_cells"] = sm.flagged_cells();
  j["representation"] = "orthonormal_coordinates";

  Planes dens;
  for (const auto& d : sm.densities()) dens.push(d.coords());
  j["densities"] = write_planes(manifest, "densities", dens, {static_cast<std::size_t>(K), N, N});

  json atoms = json::array();
  Planes jumps;
  for (const auto& a : sm.atoms()) {
    atoms.push_back(json{{"frequency", a.frequency}, {"trace", a.jump.trace().real()}});
    jumps.push(a.jump.coords());
  }
  j["atoms"] = atoms;
  j["jumps"] = write_planes(manifest, "jumps", jumps, {sm.atoms().size(), N, N});
  write_json(manifest, j);
}

SpectralMeasure read_measure(const fs::path& manifest) {
  const json j = read_json(manifest);
  check_header(j, "funspec.measure", manifest);
  auto g = grid_from_json(field<json>(j, "grid", manifest), manifest);
  const int K = field<int>(j, "num_freqs", manifest);
  if (K < 1) throw IoError(manifest.string() + ": num_freqs must be positive");
  const auto atoms_j = field<json>(j, "atoms", manifest);
  const Eigen::Index N = g->size();
  auto dens = read_planes(manifest, field<json>(j, "densities", manifest), static_cast<std::size_t>(K), N, N);
  auto jumps = read_planes(manifest, field<json>(j, "jumps", manifest), atoms_j.size(), N, N);
  try {
    std::vector<Op> d;
    for (auto& m : dens) d.push_back(Op::from_coords(g, std::move(m)));
    std::vector<SpectralMeasure::Atom> atoms;
    for (std::size_t l = 0; l < atoms_j.size(); ++l)
      atoms.push_back({field<double>(atoms_j[l], "frequency", manifest), Op::from_coords(g, std::move(jumps[l]))});
    return SpectralMeasure(g, std::move(d), std::move(atoms), field<bool>(j, "real_process", manifest),
                           field<std::vector<int>>(j, "flagged_cells", manifest));
  } catch (const DomainError& e) {
    throw IoError(manifest.string() + ": " + e.what());
  }
}

void write_eigens(const fs::path& manifest, const FrequencyEigens& eig) {
  const auto N = static_cast<std::size_t>(eig.grid->size());
  json j = header("funspec.eigens");
  j["grid"] = grid_json(*eig.grid);
  j["num_freqs"] = eig.num_freqs();
  j["real_process"] = eig.real_process;
  j["atom_frequencies"] = eig.atom_frequencies;
  j["representation"] = "orthonormal_coordinates";
  json src = json::array();
  Planes vals, vecs, avals, avecs;
  for (const auto& es : eig.densities) {
    vals.re.insert(vals.re.end(), es.eigenvalues.begin(), es.eigenvalues.end());
    vals.im.resize(vals.re.size(), 0.0);
    vecs.push(es.vectors);
    src.push_back(es.source_trace);
  }
  json asrc = json::array();
  for (const auto& es : eig.atoms) {
    avals.re.insert(avals.re.end(), es.eigenvalues.begin(), es.eigenvalues.end());
    avals.im.resize(avals.re.size(), 0.0);
    avecs.push(es.vectors);
    asrc.push_back(es.source_trace);
  }
  const auto K = static_cast<std::size_t>(eig.num_freqs()), L = eig.atoms.size();
  j["source_traces"] = src;
  j["atom_source_traces"] = asrc;
  j["eigenvalues"] = write_planes(manifest, "eigenvalues", vals, {K, 1, N});
  j["eigenvectors"] = write_planes(manifest, "eigenvectors", vecs, {K, N, N});
  j["atom_eigenvalues"] = write_planes(manifest, "atom_eigenvalues", avals, {L, 1, N});
  j["atom_eigenvectors"] = write_planes(manifest, "atom_eigenvectors", avecs, {L, N, N});
  write_json(manifest, j);
}

FrequencyEigens read_eigens(const fs::path& manifest) {
  const json j = read_json(manifest);
  check_header(j, "funspec.eigens", manifest);
  FrequencyEigens eig;
  eig.grid = grid_from_json(field<json>(j, "grid", manifest), manifest);
  eig.real_process = field<bool>(j, "real_process", manifest);
  eig.atom_frequencies = field<std::vector<double>>(j, "atom_frequencies", manifest);
  const auto K = static_cast<std::size_t>(field<int>(j, "num_freqs", manifest));
  const auto L = eig.atom_frequencies.size();
  const Eigen::Index N = eig.grid->size();
  const auto src = field<std::vector<double>>(j, "source_traces", manifest);
  const auto asrc = field<std::vector<double>>(j, "atom_source_traces", manifest);
  if (src.size() != K || asrc.size() != L) throw IoError(manifest.string() + ": trace lists do not match");
  auto vals = read_planes(manifest, field<json>(j, "eigenvalues", manifest), K, 1, N);
  auto vecs = read_planes(manifest, field<json>(j, "eigenvectors", manifest), K, N, N);
  auto avals = read_planes(manifest, field<json>(j, "atom_eigenvalues", manifest), L, 1, N);
  auto avecs = read_planes(manifest, field<json>(j, "atom_eigenvectors", manifest), L, N, N);
  for (std::size_t k = 0; k < K; ++k)
    eig.densities.push_back({eig.grid, vals[k].row(0).real().transpose(), std::move(vecs[k]), src[k]});
  for (std::size_t l = 0; l < L; ++l)
    eig.atoms.push_back({eig.grid, avals[l].row(0).real().transpose(), std::move(avecs[l]), asrc[l]});
  return eig;
}

void write_eigenvalue_table(const fs::path& path, const FrequencyEigens& eig, const SpectralMeasure& sm) {
  auto out = open_out(path);
  const int N = eig.grid->size();
  std::string line = "k,omega";
  for (int j = 1; j <= N; ++j) line += ",nu_" + std::to_string(j);
  out << line << '\n';
  for (int k = 0; k < eig.num_freqs(); ++k) {
    line = std::to_string(k) + "," + format_double(sm.frequency(k));
    for (int j = 0; j < N; ++j) line += "," + format_double(eig.densities[static_cast<std::size_t>(k)].eigenvalues(j));
    out << line << '\n';
  }
}

void write_rank_schedule(const fs::path& path, const RankSchedule& ranks, const SpectralMeasure& sm) {
  auto out = open_out(path);
  out << "k,omega,rank\n";
  for (int k = 0; k < sm.num_freqs(); ++k)
    out << k << ',' << format_double(sm.frequency(k)) << ',' << ranks.density_ranks[static_cast<std::size_t>(k)] << '\n';
  for (std::size_t l = 0; l < sm.atoms().size(); ++l)
    out << -1 << ',' << format_double(sm.atoms()[l].frequency) << ',' << ranks.atom_ranks[l] << '\n';
}

}  // namespace funspec::io

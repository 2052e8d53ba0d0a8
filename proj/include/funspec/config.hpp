#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "funspec/cramer.hpp"
#include "funspec/spectral.hpp"

namespace funspec {

/// Invalid run configuration; the message carries file, line and field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RankPolicy {
  std::optional<int> fixed;
  std::optional<double> fraction;
};

struct RunConfig {
  static constexpr int kSchemaVersion = 1;

  std::filesystem::path source;
  GridPtr grid;
  std::optional<ModelSpec> model;

  int T = 1024;
  std::optional<int> K;  // synthesis grid; default_synthesis_size(T) when absent
  std::uint64_t seed = 0;

  Window window = Window::fejer;
  std::optional<int> q;
  std::optional<int> spectral_K;

  int max_lag = 4;
  double tol = 0.02;
  int analytic_K = 8192;

  double detect_alpha = 0.01;
  int detect_m = 8;

  RankPolicy rank;
  PoleHandling pole = PoleHandling::neighbor_mean;
  std::optional<int> hfpca_K;

  std::optional<std::filesystem::path> out_dir;

  int synthesis_size() const { return K ? *K : default_synthesis_size(T); }
};

RunConfig load_config(const std::filesystem::path& path);
/// `name` labels error messages.
RunConfig parse_config(const std::string& text, const std::string& name);

/// The JSON Schema the parser enforces, as published in the repository.
const char* config_schema();

}  // namespace funspec

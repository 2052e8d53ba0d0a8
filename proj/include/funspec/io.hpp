#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "funspec/hfpca.hpp"
#include "funspec/hilbert.hpp"
#include "funspec/spectral.hpp"

namespace funspec::io {

namespace fs = std::filesystem;

/// Unreadable, missing or malformed input files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Real series: CSV `t,tau_0,...,tau_{N-1}` with one frame per row, written
/// in shortest round-trip form, plus `<stem>.grid.json` holding the grid.
void write_series_csv(const fs::path& path, const FuncSeries& series);
/// Reads a CSV series. Without a grid sidecar a trapezoid grid is assumed.
FuncSeries read_series_csv(const fs::path& path);

/// Complex objects are a JSON manifest next to raw little-endian float64
/// sidecars, real and imaginary planes in separate files.
void write_series_binary(const fs::path& manifest, const FuncSeries& series);
FuncSeries read_series_binary(const fs::path& manifest);

/// Dispatches on the extension: .csv or .json.
void write_series(const fs::path& path, const FuncSeries& series);
FuncSeries read_series(const fs::path& path);

/// Densities and atom jumps are stored in orthonormal coordinates
/// W^{1/2} K W^{1/2}; divide entry (i, j) by sqrt(w_i w_j) for the kernel.
void write_measure(const fs::path& manifest, const SpectralMeasure& sm);
SpectralMeasure read_measure(const fs::path& manifest);

void write_eigens(const fs::path& manifest, const FrequencyEigens& eig);
FrequencyEigens read_eigens(const fs::path& manifest);

/// k,omega,nu_1,...,nu_N per grid frequency.
void write_eigenvalue_table(const fs::path& path, const FrequencyEigens& eig, const SpectralMeasure& sm);
/// k,omega,rank per grid frequency, then atom rows with k = -1.
void write_rank_schedule(const fs::path& path, const RankSchedule& ranks, const SpectralMeasure& sm);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace funspec::io

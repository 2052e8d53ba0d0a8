#pragma once

#include <string_view>
#include <vector>

#include "funspec/covariance.hpp"
#include "funspec/hilbert.hpp"

namespace funspec {

/// Operator-valued spectral measure on (-pi, pi]: a density sampled on the
/// uniform grid omega_k = -pi + 2 pi (k+1)/K (operator per radian) plus a
/// finite, sorted list of atoms carrying PSD jump operators.
class SpectralMeasure {
 public:
  struct Atom {
    double frequency;
    Op jump;
  };

  /// Validates: every density and jump PSD, atom frequencies distinct and
  /// sorted in (-pi, pi], finite total mass, and, when real_process is set,
  /// F(-w) = conj(F(w)) entrywise with atoms in conjugate +-w pairs.
  /// flagged_cells lists grid indices whose density was substituted (e.g.
  /// the pole cell of a long-memory model).
  SpectralMeasure(GridPtr grid, std::vector<Op> densities, std::vector<Atom> atoms, bool real_process,
                  std::vector<int> flagged_cells = {});

  const GridPtr& grid() const { return grid_; }
  int num_freqs() const { return static_cast<int>(densities_.size()); }
  double frequency(int k) const;
  /// Cell width 2 pi / K.
  double delta() const;
  const Op& density(int k) const { return densities_.at(static_cast<std::size_t>(k)); }
  const std::vector<Op>& densities() const { return densities_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  bool is_real_process() const { return real_; }
  const std::vector<int>& flagged_cells() const { return flagged_; }

  /// trace of the whole measure, mu_F((-pi, pi]).
  double total_mass() const;
  /// int e^{i h w} d mu_F(w), the scalar trace measure's Fourier coefficient.
  cplx trace_fourier(int h) const;

 private:
  GridPtr grid_;
  std::vector<Op> densities_;
  std::vector<Atom> atoms_;
  bool real_;
  std::vector<int> flagged_;
};

enum class Window { fejer, bartlett, parzen };

Window parse_window(std::string_view name);
std::string_view to_string(Window w);
/// Lag weight kappa_h for bandwidth q. Fejer is the Cesaro mean of partial
/// sums of order 0..q, 1 - |h|/(q+1); Bartlett is 1 - |h|/q; Parzen is the
/// usual cubic spline window. All equal 1 at h = 0 and vanish for |h| > q.
double lag_window(Window w, int h, int q);

/// Lag-window estimate F_k = (1/2pi) sum_{|h|<=q} kappa_h C_h e^{-i h w_k},
/// each F_k projected onto the PSD cone. Produces no atoms.
SpectralMeasure herglotz_forward(const LagCovSequence& lagcov, int K, int q, Window window = Window::fejer);

/// C_h = sum_k e^{i h w_k} F_k dw + sum_l e^{i h w_l} J_l, for |h| <= K/2.
Op herglotz_inverse(const SpectralMeasure& sm, int h);

/// Inverse transform for lags 0..max_lag packaged as a covariance sequence.
LagCovSequence herglotz_inverse_sequence(const SpectralMeasure& sm, int max_lag);

/// mu_F((a, b]) for -pi <= a <= b <= pi.
double trace_measure(const SpectralMeasure& sm, double a, double b);

/// Hidden-periodicity screen on the functional periodogram trace.
///
/// Heuristic: the trace at each Fourier frequency 2 pi j / T is compared to
/// the median of its 2m circular neighbours. Under an exponential null the
/// neighbour median estimates ln(2) times the local mean, and a frequency is
/// flagged when its trace exceeds -ln(2 alpha / T) times that mean. Each
/// flagged frequency gets the rank-one jump estimate D D^H / T^2 with
/// D = sum_t X_t e^{-i t w}.
std::vector<SpectralMeasure::Atom> detect_atoms(const FuncSeries& series, double alpha, int m);

}  // namespace funspec

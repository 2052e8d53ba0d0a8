#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "funspec/grid.hpp"

namespace funspec {

using cplx = std::complex<double>;

/// A single curve sampled on a Grid.
class Func {
 public:
  Func(GridPtr grid, Eigen::VectorXcd values);
  Func(GridPtr grid, const Eigen::VectorXd& values);

  /// Samples f(tau_i) for every grid point.
  template <class F>
  static Func sample(GridPtr grid, F&& f) {
    Eigen::VectorXcd v(grid->size());
    for (int i = 0; i < grid->size(); ++i) v(i) = cplx(f(grid->points()[i]));
    return Func(std::move(grid), std::move(v));
  }

  const GridPtr& grid() const { return grid_; }
  const Eigen::VectorXcd& values() const { return values_; }
  int size() const { return static_cast<int>(values_.size()); }

  /// Values in quadrature-orthonormal coordinates, sqrt(w_i) f_i.
  Eigen::VectorXcd coords() const;
  static Func from_coords(GridPtr grid, const Eigen::VectorXcd& c);

 private:
  GridPtr grid_;
  Eigen::VectorXcd values_;
};

/// A finite stretch X_0 ... X_{T-1} of curves on a common grid. Row t of
/// frames() holds X_t.
class FuncSeries {
 public:
  FuncSeries(GridPtr grid, Eigen::MatrixXcd frames, bool real_flag);
  FuncSeries(GridPtr grid, const Eigen::MatrixXd& frames);

  const GridPtr& grid() const { return grid_; }
  const Eigen::MatrixXcd& frames() const { return frames_; }
  int length() const { return static_cast<int>(frames_.rows()); }
  bool is_real() const { return real_; }
  Func frame(int t) const;

  /// frames() with every column scaled by sqrt(w_i).
  Eigen::MatrixXcd coords() const;
  static FuncSeries from_coords(GridPtr grid, const Eigen::MatrixXcd& c, bool real_flag);

 private:
  GridPtr grid_;
  Eigen::MatrixXcd frames_;
  bool real_;
};

/// Discretized linear operator on the grid.
///
/// The kernel K acts as (A f)(tau_i) = sum_j K_ij w_j f(tau_j). Internally the
/// operator is stored in quadrature-orthonormal coordinates
/// W^{1/2} K W^{1/2}, where the weighted inner product becomes the standard
/// one and adjoints are plain conjugate transposes.
class Op {
 public:
  static Op from_kernel(GridPtr grid, const Eigen::MatrixXcd& kernel);
  static Op from_coords(GridPtr grid, Eigen::MatrixXcd coords);
  static Op identity(GridPtr grid);
  static Op zero(GridPtr grid);
  /// Wraps coordinates already known to be PSD (e.g. clipped eigen
  /// reconstructions); the PSD flag is set without re-checking.
  static Op trusted_psd(GridPtr grid, Eigen::MatrixXcd coords);

  const GridPtr& grid() const { return grid_; }
  int size() const { return static_cast<int>(coords_.rows()); }
  const Eigen::MatrixXcd& coords() const { return coords_; }
  Eigen::MatrixXcd kernel() const;

  bool is_hermitian() const { return hermitian_; }
  /// Set only by routines that produce PSD output or by certify_psd().
  bool is_psd() const { return psd_; }
  /// Computes the smallest eigenvalue and sets the PSD flag when it is
  /// >= -1e-10 * trace_norm. Returns whether the flag was set.
  bool certify_psd();

  cplx trace() const { return coords_.trace(); }
  Func apply(const Func& f) const;

  Op& operator+=(const Op& other);
  Op& operator-=(const Op& other);
  Op& operator*=(cplx s);

 private:
  Op(GridPtr grid, Eigen::MatrixXcd coords);

  GridPtr grid_;
  Eigen::MatrixXcd coords_;
  bool hermitian_ = false;
  bool psd_ = false;

};

Op operator+(Op a, const Op& b);
Op operator-(Op a, const Op& b);
Op operator*(cplx s, Op a);
/// Composition (a b) f = a(b f).
Op compose(const Op& a, const Op& b);

struct OpNorms {
  double trace_norm = 0.0;
  double hs_norm = 0.0;
  double op_norm = 0.0;
};

/// Descending eigenvalues and orthonormal eigenfunctions of a Hermitian Op.
/// Eigenvectors are held as columns in quadrature-orthonormal coordinates.
struct EigenSystem {
  GridPtr grid;
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXcd vectors;
  double source_trace = 0.0;

  int size() const { return static_cast<int>(eigenvalues.size()); }
  Func eigenfunction(int j) const;
};

cplx inner(const Func& f, const Func& g);
double norm(const Func& f);
/// Rank-one operator (f (x) g) h = <h, g> f.
Op tensor(const Func& f, const Func& g);
Op adjoint(const Op& a);
OpNorms norms(const Op& a);
/// Hermitian eigendecomposition. Each eigenfunction's largest-modulus value is
/// made real and positive (first index wins ties), so repeated calls on the
/// same input are bit-identical.
EigenSystem eigh(const Op& a);
/// Clips negative eigenvalues to zero.
Op psd_project(const Op& a);
/// Principal square root of a PSD operator; tiny negative eigenvalues are
/// clipped, anything below -1e-8 * trace_norm is rejected.
Op psd_sqrt(const Op& a);

/// Relative tolerances shared by the whole library.
inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kPsdTol = 1e-10;
inline constexpr double kSqrtIndefiniteTol = 1e-8;

namespace linalg {

/// Raw-matrix kernels shared by the typed API and by hot loops that work in
/// orthonormal coordinates directly.
bool is_hermitian(const Eigen::MatrixXcd& m, double rel_tol = kHermitianTol);
Eigen::MatrixXcd hermitian_part(const Eigen::MatrixXcd& m);

struct HermitianEigen {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXcd vectors; // columns, phase-normalized
};

/// Descending eigensystem with the phase convention applied against the
/// given inverse square-root weights (function-value scale).
HermitianEigen eigh(const Eigen::MatrixXcd& m, const Eigen::VectorXd& inv_sqrt_w);
Eigen::MatrixXcd psd_project(const Eigen::MatrixXcd& m);
Eigen::MatrixXcd psd_sqrt(const Eigen::MatrixXcd& m);
Eigen::VectorXd singular_values(const Eigen::MatrixXcd& m);
double trace_norm(const Eigen::MatrixXcd& m);

}  // namespace linalg

}  // namespace funspec

#include "funspec/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "funspec/errors.hpp"

namespace funspec {

namespace {

void require_finite(const Eigen::MatrixXcd& m, const char* where) {
  if (!m.allFinite()) throw DomainError(std::string(where) + ": non-finite entries");
}

}  // namespace

// ---------------------------------------------------------------------------
// Func / FuncSeries

Func::Func(GridPtr grid, Eigen::VectorXcd values) : grid_(std::move(grid)), values_(std::move(values)) {
  if (!grid_) throw DomainError("Func: missing grid");
  if (values_.size() != grid_->size()) throw DomainError("Func: length does not match grid");
  require_finite(values_, "Func");
}

Func::Func(GridPtr grid, const Eigen::VectorXd& values)
    : Func(std::move(grid), Eigen::VectorXcd(values.cast<cplx>())) {}

Eigen::VectorXcd Func::coords() const { return grid_->sqrt_weights().cwiseProduct(values_); }

Func Func::from_coords(GridPtr grid, const Eigen::VectorXcd& c) {
  Eigen::VectorXcd v = grid->inv_sqrt_weights().cwiseProduct(c);
  return Func(std::move(grid), std::move(v));
}

FuncSeries::FuncSeries(GridPtr grid, Eigen::MatrixXcd frames, bool real_flag)
    : grid_(std::move(grid)), frames_(std::move(frames)), real_(real_flag) {
  if (!grid_) throw DomainError("FuncSeries: missing grid");
  if (frames_.cols() != grid_->size()) throw DomainError("FuncSeries: frame length does not match grid");
  require_finite(frames_, "FuncSeries");
  if (real_ && frames_.imag().cwiseAbs().maxCoeff() != 0.0)
    throw DomainError("FuncSeries: real flag set but imaginary parts are non-zero");
}

FuncSeries::FuncSeries(GridPtr grid, const Eigen::MatrixXd& frames)
    : FuncSeries(std::move(grid), Eigen::MatrixXcd(frames.cast<cplx>()), true) {}

Func FuncSeries::frame(int t) const {
  if (t < 0 || t >= length()) throw DomainError("FuncSeries::frame: index out of range");
  return Func(grid_, Eigen::VectorXcd(frames_.row(t).transpose()));
}

Eigen::MatrixXcd FuncSeries::coords() const {
  return frames_ * grid_->sqrt_weights().asDiagonal();
}

FuncSeries FuncSeries::from_coords(GridPtr grid, const Eigen::MatrixXcd& c, bool real_flag) {
  Eigen::MatrixXcd v = c * grid->inv_sqrt_weights().asDiagonal();
  if (real_flag) v = v.real().cast<cplx>();
  return FuncSeries(std::move(grid), std::move(v), real_flag);
}

// ---------------------------------------------------------------------------
// Op

Op::Op(GridPtr grid, Eigen::MatrixXcd coords) : grid_(std::move(grid)), coords_(std::move(coords)) {
  if (!grid_) throw DomainError("Op: missing grid");
  if (coords_.rows() != grid_->size() || coords_.cols() != grid_->size())
    throw DomainError("Op: matrix shape does not match grid");
  require_finite(coords_, "Op");
  hermitian_ = linalg::is_hermitian(coords_);
}

Op Op::from_kernel(GridPtr grid, const Eigen::MatrixXcd& kernel) {
  if (!grid) throw DomainError("Op: missing grid");
  if (kernel.rows() != grid->size() || kernel.cols() != grid->size())
    throw DomainError("Op: kernel shape does not match grid");
  const auto& s = grid->sqrt_weights();
  Eigen::MatrixXcd c = s.asDiagonal() * kernel * s.asDiagonal();
  return Op(std::move(grid), std::move(c));
}

Op Op::from_coords(GridPtr grid, Eigen::MatrixXcd coords) { return Op(std::move(grid), std::move(coords)); }

Op Op::trusted_psd(GridPtr grid, Eigen::MatrixXcd coords) {
  Op op(std::move(grid), std::move(coords));
  op.psd_ = op.hermitian_;
  return op;
}

Op Op::identity(GridPtr grid) {
  const int n = grid->size();
  return trusted_psd(std::move(grid), Eigen::MatrixXcd::Identity(n, n));
}

Op Op::zero(GridPtr grid) {
  const int n = grid->size();
  return trusted_psd(std::move(grid), Eigen::MatrixXcd::Zero(n, n));
}

Eigen::MatrixXcd Op::kernel() const {
  const auto& s = grid_->inv_sqrt_weights();
  return s.asDiagonal() * coords_ * s.asDiagonal();
}

bool Op::certify_psd() {
  if (!hermitian_) return psd_ = false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(linalg::hermitian_part(coords_),
                                                     Eigen::EigenvaluesOnly);
  const double tn = es.eigenvalues().cwiseAbs().sum();
  psd_ = es.eigenvalues().minCoeff() >= -kPsdTol * tn;
  return psd_;
}

Func Op::apply(const Func& f) const {
  require_same_grid(grid_, f.grid(), "Op::apply");
  return Func::from_coords(grid_, coords_ * f.coords());
}

Op& Op::operator+=(const Op& other) {
  require_same_grid(grid_, other.grid_, "Op::operator+=");
  coords_ += other.coords_;
  hermitian_ = linalg::is_hermitian(coords_);
  psd_ = psd_ && other.psd_ && hermitian_;
  return *this;
}

Op& Op::operator-=(const Op& other) {
  require_same_grid(grid_, other.grid_, "Op::operator-=");
  coords_ -= other.coords_;
  hermitian_ = linalg::is_hermitian(coords_);
  psd_ = false;
  return *this;
}

Op& Op::operator*=(cplx s) {
  coords_ *= s;
  hermitian_ = linalg::is_hermitian(coords_);
  psd_ = psd_ && hermitian_ && s.imag() == 0.0 && s.real() >= 0.0;
  return *this;
}

Op operator+(Op a, const Op& b) { return a += b; }
Op operator-(Op a, const Op& b) { return a -= b; }
Op operator*(cplx s, Op a) { return a *= s; }

Op compose(const Op& a, const Op& b) {
  require_same_grid(a.grid(), b.grid(), "compose");
  return Op::from_coords(a.grid(), a.coords() * b.coords());
}

Func EigenSystem::eigenfunction(int j) const {
  if (j < 0 || j >= size()) throw DomainError("EigenSystem::eigenfunction: index out of range");
  return Func::from_coords(grid, vectors.col(j));
}

// ---------------------------------------------------------------------------
// Operations

cplx inner(const Func& f, const Func& g) {
  require_same_grid(f.grid(), g.grid(), "inner");
  const auto& w = f.grid()->weights();
  cplx acc = 0.0;
  for (int i = 0; i < f.size(); ++i) acc += w[static_cast<std::size_t>(i)] * f.values()(i) * std::conj(g.values()(i));
  return acc;
}

double norm(const Func& f) { return std::sqrt(std::real(inner(f, f))); }

Op tensor(const Func& f, const Func& g) {
  require_same_grid(f.grid(), g.grid(), "tensor");
  const Eigen::VectorXcd fc = f.coords();
  const Eigen::VectorXcd gc = g.coords();
  return Op::from_coords(f.grid(), fc * gc.adjoint());
}

Op adjoint(const Op& a) {
  Op out = Op::from_coords(a.grid(), a.coords().adjoint());
  return a.is_psd() ? Op::trusted_psd(a.grid(), out.coords()) : out;
}

OpNorms norms(const Op& a) {
  const Eigen::VectorXd sv = linalg::singular_values(a.coords());
  OpNorms n;
  n.trace_norm = sv.sum();
  n.hs_norm = sv.norm();
  n.op_norm = sv.size() ? sv.maxCoeff() : 0.0;
  return n;
}

EigenSystem eigh(const Op& a) {
  if (!a.is_hermitian()) throw DomainError("eigh: operator is not Hermitian");
  auto he = linalg::eigh(a.coords(), a.grid()->inv_sqrt_weights());
  EigenSystem es;
  es.grid = a.grid();
  es.eigenvalues = std::move(he.values);
  es.vectors = std::move(he.vectors);
  es.source_trace = a.trace().real();
  return es;
}

Op psd_project(const Op& a) {
  if (!a.is_hermitian()) throw DomainError("psd_project: operator is not Hermitian");
  return Op::trusted_psd(a.grid(), linalg::psd_project(a.coords()));
}

Op psd_sqrt(const Op& a) {
  if (!a.is_hermitian()) throw DomainError("psd_sqrt: operator is not Hermitian");
  return Op::trusted_psd(a.grid(), linalg::psd_sqrt(a.coords()));
}

// ---------------------------------------------------------------------------
// linalg

namespace linalg {

bool is_hermitian(const Eigen::MatrixXcd& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = m.cwiseAbs().maxCoeff();
  if (scale == 0.0) return true;
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

Eigen::MatrixXcd hermitian_part(const Eigen::MatrixXcd& m) { return 0.5 * (m + m.adjoint()); }

HermitianEigen eigh(const Eigen::MatrixXcd& m, const Eigen::VectorXd& inv_sqrt_w) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hermitian_part(m));
  if (es.info() != Eigen::Success) throw NumericError("eigh: eigensolver did not converge");
  const Eigen::Index n = m.rows();
  HermitianEigen out;
  out.values = es.eigenvalues().reverse();
  out.vectors = es.eigenvectors().rowwise().reverse();
  for (Eigen::Index j = 0; j < n; ++j) {
    auto v = out.vectors.col(j);
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mag = std::abs(v(i)) * inv_sqrt_w(i);
      if (mag > best) {
        best = mag;
        arg = i;
      }
    }
    const double r = std::abs(v(arg));
    if (r == 0.0) continue;
    v *= std::conj(v(arg)) / r;
    v(arg) = cplx(r, 0.0);
  }
  return out;
}

Eigen::MatrixXcd psd_project(const Eigen::MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hermitian_part(m));
  if (es.info() != Eigen::Success) throw NumericError("psd_project: eigensolver did not converge");
  if (es.eigenvalues().minCoeff() >= 0.0) return hermitian_part(m);
  const Eigen::VectorXd clipped = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().adjoint();
}

Eigen::MatrixXcd psd_sqrt(const Eigen::MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hermitian_part(m));
  if (es.info() != Eigen::Success) throw NumericError("psd_sqrt: eigensolver did not converge");
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double tn = ev.cwiseAbs().sum();
  if (ev.size() && ev.minCoeff() < -kSqrtIndefiniteTol * tn)
    throw DomainError("psd_sqrt: operator is indefinite");
  // Eigenvalues at round-off level would otherwise turn into O(sqrt(eps)) roots.
  const double floor = static_cast<double>(ev.size()) * std::numeric_limits<double>::epsilon() * ev.cwiseAbs().maxCoeff();
  const Eigen::VectorXd root = ev.unaryExpr([floor](double v) { return v > floor ? std::sqrt(v) : 0.0; });
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().adjoint();
}

Eigen::VectorXd singular_values(const Eigen::MatrixXcd& m) {
  if (m.size() == 0) return Eigen::VectorXd();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  return svd.singularValues();
}

double trace_norm(const Eigen::MatrixXcd& m) { return singular_values(m).sum(); }

}  // namespace linalg

}  // namespace funspec

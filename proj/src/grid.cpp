#include "funspec/grid.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "funspec/errors.hpp"

namespace funspec {

Quadrature parse_quadrature(std::string_view name) {
  if (name == "trapezoid") return Quadrature::trapezoid;
  if (name == "midpoint") return Quadrature::midpoint;
  if (name == "gauss_legendre") return Quadrature::gauss_legendre;
  throw DomainError("unknown quadrature rule '" + std::string(name) + "'");
}

std::string_view to_string(Quadrature q) {
  switch (q) {
    case Quadrature::trapezoid: return "trapezoid";
    case Quadrature::midpoint: return "midpoint";
    case Quadrature::gauss_legendre: return "gauss_legendre";
  }
  return "trapezoid";
}

Grid::Grid(std::vector<double> points, std::vector<double> weights, Quadrature rule)
    : points_(std::move(points)), weights_(std::move(weights)), rule_(rule) {
  if (points_.empty()) throw DomainError("Grid: at least one point required");
  if (points_.size() != weights_.size())
    throw DomainError("Grid: points and weights differ in length");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!(points_[i] >= 0.0 && points_[i] <= 1.0))
      throw DomainError("Grid: point outside [0,1]");
    if (i > 0 && !(points_[i] > points_[i - 1]))
      throw DomainError("Grid: points must be strictly increasing");
    if (!(weights_[i] > 0.0) || !std::isfinite(weights_[i]))
      throw DomainError("Grid: weights must be positive");
  }
  const double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12) throw DomainError("Grid: weights must sum to one");

  const auto n = static_cast<Eigen::Index>(weights_.size());
  sqrt_w_.resize(n);
  inv_sqrt_w_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    sqrt_w_(i) = std::sqrt(weights_[static_cast<std::size_t>(i)]);
    inv_sqrt_w_(i) = 1.0 / sqrt_w_(i);
  }
}

std::shared_ptr<const Grid> Grid::make(int n, Quadrature rule) {
  std::vector<double> pts(static_cast<std::size_t>(n > 0 ? n : 0));
  std::vector<double> w(pts.size());
  if (rule == Quadrature::trapezoid) {
    if (n < 2) throw DomainError("Grid::make: trapezoid rule needs n >= 2");
    const double h = 1.0 / (n - 1);
    for (int i = 0; i < n; ++i) {
      pts[i] = (i == n - 1) ? 1.0 : i * h;
      w[i] = (i == 0 || i == n - 1) ? 0.5 * h : h;
    }
  } else if (rule == Quadrature::gauss_legendre) {
    if (n < 1) throw DomainError("Grid::make: Gauss-Legendre rule needs n >= 1");
    // Golub-Welsch: nodes are the eigenvalues of the Jacobi matrix of the
    // Legendre recurrence, weights the squared first eigenvector components.
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
      const double b = k / std::sqrt(4.0 * k * k - 1.0);
      jac(k, k - 1) = b;
      jac(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      pts[i] = 0.5 * (es.eigenvalues()(i) + 1.0);
      w[i] = es.eigenvectors()(0, i) * es.eigenvectors()(0, i);
      total += w[i];
    }
    for (auto& wi : w) wi /= total;
  } else {
    if (n < 1) throw DomainError("Grid::make: midpoint rule needs n >= 1");
    for (int i = 0; i < n; ++i) {
      pts[i] = (i + 0.5) / n;
      w[i] = 1.0 / n;
    }
  }
  return std::make_shared<const Grid>(std::move(pts), std::move(w), rule);
}

bool Grid::operator==(const Grid& other) const {
  return points_ == other.points_ && weights_ == other.weights_;
}

void require_same_grid(const GridPtr& a, const GridPtr& b, const char* where) {
  if (!a || !b) throw DomainError(std::string(where) + ": missing grid");
  if (a != b && !(*a == *b)) throw DomainError(std::string(where) + ": grid mismatch");
}

}  // namespace funspec

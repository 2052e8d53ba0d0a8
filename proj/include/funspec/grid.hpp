#pragma once

#include <memory>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace funspec {

enum class Quadrature { trapezoid, midpoint, gauss_legendre };

Quadrature parse_quadrature(std::string_view name);
std::string_view to_string(Quadrature q);

/// Discretization of [0,1] with positive quadrature weights summing to one.
///
/// The ambient Hilbert space L^2([0,1]) is modeled as C^N with the weighted
/// inner product <f,g> = sum_i w_i f_i conj(g_i). Grids are immutable and
/// shared between the objects that live on them through GridPtr.
class Grid {
 public:
  /// Validates the invariants: points strictly increasing in [0,1], all
  /// weights positive, weights summing to 1 within 1e-12.
  Grid(std::vector<double> points, std::vector<double> weights,
       Quadrature rule = Quadrature::trapezoid);

  /// n-point rule on [0,1]: uniform nodes for trapezoid and midpoint,
  /// Gauss-Legendre nodes otherwise.
  static std::shared_ptr<const Grid> make(int n, Quadrature rule = Quadrature::trapezoid);

  int size() const { return static_cast<int>(points_.size()); }
  const std::vector<double>& points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }
  Quadrature rule() const { return rule_; }

  /// sqrt(w_i); maps function values to quadrature-orthonormal coordinates.
  const Eigen::VectorXd& sqrt_weights() const { return sqrt_w_; }
  const Eigen::VectorXd& inv_sqrt_weights() const { return inv_sqrt_w_; }

  bool operator==(const Grid& other) const;

 private:
  std::vector<double> points_;
  std::vector<double> weights_;
  Quadrature rule_;
  Eigen::VectorXd sqrt_w_;
  Eigen::VectorXd inv_sqrt_w_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Throws DomainError unless both grids describe the same discretization.
void require_same_grid(const GridPtr& a, const GridPtr& b, const char* where);

}  // namespace funspec

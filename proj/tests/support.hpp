#pragma once

// Fixtures shared by the unit and acceptance suites.

#include <cmath>
#include <numbers>
#include <random>

#include "funspec/cramer.hpp"
#include "funspec/hilbert.hpp"

namespace funspec::testing {

inline Eigen::MatrixXd random_real(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = nd(rng);
  return m;
}

inline Eigen::MatrixXcd random_complex(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXcd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = {nd(rng), nd(rng)};
  return m;
}

/// Real PSD operator with trace `trace`, rank at most `rank`.
inline Op random_psd(const GridPtr& g, std::mt19937_64& rng, int rank, double trace = 1.0) {
  const int n = g->size();
  Eigen::MatrixXd b = random_real(rng, n).leftCols(rank);
  Eigen::MatrixXd c = b * b.transpose();
  c *= trace / c.trace();
  return Op::trusted_psd(g, c.cast<cplx>());
}

inline Op random_hermitian(const GridPtr& g, std::mt19937_64& rng) {
  Eigen::MatrixXcd m = random_complex(rng, g->size());
  return Op::from_coords(g, 0.5 * (m + m.adjoint()));
}

/// Real operator with operator norm `opnorm`.
inline Op random_real_op(const GridPtr& g, std::mt19937_64& rng, double opnorm) {
  Eigen::MatrixXd m = random_real(rng, g->size());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  m *= opnorm / svd.singularValues()(0);
  return Op::from_coords(g, m.cast<cplx>());
}

struct Fma1 {
  GridPtr grid;
  Op sigma;
  Op theta;
  ModelSpec model;
};

/// FMA(1) X_t = e_t + Theta e_{t-1} with a full-rank real Sigma of unit
/// trace and ||Theta||_op = 0.6.
inline Fma1 make_fma1(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto g = Grid::make(n);
  Op sigma = random_psd(g, rng, n);
  Op theta = random_real_op(g, rng, 0.6);
  return {g, sigma, theta, ModelSpec::fma1(sigma, theta)};
}

/// (1/2pi)(I + Theta e^{-iw}) Sigma (I + Theta e^{-iw})^*, written out
/// directly in orthonormal coordinates.
inline Eigen::MatrixXcd fma1_density(const Fma1& f, double w) {
  const int n = f.grid->size();
  const Eigen::MatrixXcd a = Eigen::MatrixXcd::Identity(n, n) + std::polar(1.0, -w) * f.theta.coords();
  return a * f.sigma.coords() * a.adjoint() / (2.0 * std::numbers::pi);
}

inline double tnorm(const Eigen::MatrixXcd& m) { return linalg::trace_norm(m); }

}  // namespace funspec::testing

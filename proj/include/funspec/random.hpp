#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace funspec {

/// Counter-based sub-seeding: the engine for (seed, stream, index) depends
/// only on those three values, so draws never depend on scheduling.
std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

/// Circularly symmetric standard complex Gaussian vector, E[z z^H] = I.
Eigen::VectorXcd complex_gaussian(std::mt19937_64& rng, int n);
Eigen::MatrixXcd complex_gaussian(std::mt19937_64& rng, int rows, int cols);
/// Real standard Gaussian vector (as complex), E[z z^T] = I.
Eigen::VectorXcd real_gaussian(std::mt19937_64& rng, int n);

}  // namespace funspec

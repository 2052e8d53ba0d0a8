#include "funspec/random.hpp"

#include <cmath>
#include <complex>

namespace funspec {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  const std::uint64_t a = splitmix64(seed ^ splitmix64(stream));
  const std::uint64_t b = splitmix64(a ^ splitmix64(index + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

Eigen::VectorXcd complex_gaussian(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> nd(0.0, M_SQRT1_2);
  Eigen::VectorXcd z(n);
  for (int i = 0; i < n; ++i) {
    const double re = nd(rng);
    const double im = nd(rng);
    z(i) = {re, im};
  }
  return z;
}

Eigen::MatrixXcd complex_gaussian(std::mt19937_64& rng, int rows, int cols) {
  Eigen::MatrixXcd z(rows, cols);
  for (int c = 0; c < cols; ++c) z.col(c) = complex_gaussian(rng, rows);
  return z;
}

Eigen::VectorXcd real_gaussian(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::VectorXcd z(n);
  for (int i = 0; i < n; ++i) z(i) = nd(rng);
  return z;
}

}  // namespace funspec

#include "funspec/fourier.hpp"

#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "funspec/errors.hpp"
#include "funspec/parallel.hpp"

namespace funspec {

using std::numbers::pi;

double grid_frequency(int k, int K) { return -pi + 2.0 * pi * (k + 1) / K; }

std::vector<double> frequency_grid(int K) {
  std::vector<double> w(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) w[static_cast<std::size_t>(k)] = grid_frequency(k, K);
  return w;
}

double wrap_angle(double omega) {
  double w = std::remainder(omega, 2.0 * pi);
  if (w <= -pi) w += 2.0 * pi;
  return w;
}

int nearest_grid_index(double omega, int K) {
  const double w = wrap_angle(omega);
  long long m = std::llround((w + pi) * K / (2.0 * pi));
  m = ((m - 1) % K + K) % K;
  return static_cast<int>(m);
}

std::optional<int> grid_index(double omega, int K, double tol) {
  const int k = nearest_grid_index(omega, K);
  const double d = std::abs(wrap_angle(omega - grid_frequency(k, K)));
  if (d <= tol) return k;
  return std::nullopt;
}

PhaseTable::PhaseTable(int K) : table_(static_cast<std::size_t>(K)) {
  if (K <= 0) throw DomainError("PhaseTable: size must be positive");
  for (int m = 0; m <= K / 2; ++m) {
    std::complex<double> z;
    if (4LL * m == K) {
      z = {0.0, 1.0};
    } else if (2LL * m == K) {
      z = {-1.0, 0.0};
    } else if (m == 0) {
      z = {1.0, 0.0};
    } else {
      const double a = 2.0 * pi * m / K;
      z = {std::cos(a), std::sin(a)};
    }
    table_[static_cast<std::size_t>(m)] = z;
    if (m > 0 && m < K - m) table_[static_cast<std::size_t>(K - m)] = std::conj(z);
  }
}

std::complex<double> PhaseTable::operator()(long long m) const {
  const long long K = static_cast<long long>(table_.size());
  long long r = m % K;
  if (r < 0) r += K;
  return table_[static_cast<std::size_t>(r)];
}

std::complex<double> PhaseTable::at_grid(long long h, int k) const {
  // omega_k = 2 pi (k + 1 - K/2) / K; for odd K the half-turn is folded into
  // a doubled table index.
  const long long K = static_cast<long long>(table_.size());
  if (K % 2 == 0) return (*this)(h * (k + 1 - K / 2));
  const std::complex<double> half = (h % 2 == 0) ? 1.0 : -1.0;
  return half * (*this)(h * (k + 1));
}

Eigen::MatrixXcd dft_rows(const Eigen::MatrixXcd& in, bool inverse) {
  const int rows = static_cast<int>(in.rows());
  const int cols = static_cast<int>(in.cols());
  Eigen::MatrixXcd out(rows, cols);
  if (rows == 0) return out;
  parallel_for(0, cols, [&](int c) {
    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::Unscaled);
    std::vector<std::complex<double>> src(static_cast<std::size_t>(rows)), dst;
    for (int r = 0; r < rows; ++r) src[static_cast<std::size_t>(r)] = in(r, c);
    if (inverse)
      fft.inv(dst, src);
    else
      fft.fwd(dst, src);
    for (int r = 0; r < rows; ++r) out(r, c) = dst[static_cast<std::size_t>(r)];
  });
  return out;
}

}  // namespace funspec

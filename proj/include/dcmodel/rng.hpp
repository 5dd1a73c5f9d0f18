#pragma once

#include <cstdint>
#include <random>

#include "dcmodel/linops.hpp"

namespace dcmodel {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// mt19937_64 with hand-rolled conversions, so the stream of doubles is the
/// same on every platform (the std distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<int>(engine_() % span);
  }

  Complex complex_in_square() { return {uniform(-1.0, 1.0), uniform(-1.0, 1.0)}; }

  /// Point of the open disk with modulus at most max_radius.
  Complex point_in_disk(double max_radius) {
    while (true) {
      Complex z = complex_in_square();
      if (std::abs(z) < 1.0) return max_radius * z;
    }
  }

  Matrix matrix(Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) m(i, j) = complex_in_square();
    return m;
  }

  Vector vector(Index n) { return matrix(n, 1).col(0); }

  /// Random square matrix rescaled to the given operator norm.
  Matrix matrix_with_norm(Index n, double norm) {
    Matrix m = matrix(n, n);
    const double current = op_norm(m);
    return current == 0.0 ? m : Matrix(m * (norm / current));
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dcmodel

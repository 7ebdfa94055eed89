#ifndef ONEBIT_RNG_HPP
#define ONEBIT_RNG_HPP

#include <complex>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace onebit {

enum class Field { Real, Complex };

inline const char* field_name(Field f) { return f == Field::Real ? "real" : "complex"; }

// splitmix64 finalizer; used to derive independent stream seeds from a root seed.
inline std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
  return mix_seed(root ^ mix_seed(stream));
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b) {
  return derive_seed(derive_seed(root, a), b);
}

// Seedable Gaussian source. Streams for parallel work are obtained by
// deriving child seeds with derive_seed, never by sharing one Rng.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  double normal() { return normal_(gen_); }

  double uniform() { return uniform_(gen_); }

  // unit-variance circularly-symmetric complex Gaussian
  std::complex<double> cnormal() {
    const double re = normal();
    const double im = normal();
    return {re * kInvSqrt2, im * kInvSqrt2};
  }

  template <class Scalar>
  Scalar gaussian();

  template <class Scalar>
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> gaussian_vector(Eigen::Index n) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = gaussian<Scalar>();
    return v;
  }

  template <class Scalar>
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> gaussian_matrix(Eigen::Index rows,
                                                                        Eigen::Index cols) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = gaussian<Scalar>();
    return m;
  }

 private:
  static constexpr double kInvSqrt2 = 0.7071067811865475244;
  std::mt19937_64 gen_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

template <>
inline double Rng::gaussian<double>() {
  return normal();
}

template <>
inline std::complex<double> Rng::gaussian<std::complex<double>>() {
  return cnormal();
}

}  // namespace onebit

#endif  // ONEBIT_RNG_HPP

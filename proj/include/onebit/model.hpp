#ifndef ONEBIT_MODEL_HPP
#define ONEBIT_MODEL_HPP

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "onebit/rng.hpp"
#include "onebit/spectral.hpp"

namespace onebit {

/// Ground-truth covariance in factored form: Sigma = U diag(eigvals) U^H,
/// with U orthonormal n x r and eigvals positive descending.
template <class Scalar>
struct CovarianceModel {
  int n = 0;
  int r = 0;
  MatrixX<Scalar> basis;
  VectorXd eigvals;

  MatrixX<Scalar> materialize() const {
    return basis * eigvals.asDiagonal() * basis.adjoint();
  }

  /// The truth factor X = U diag(sqrt(eigvals)) used by the NMSE metric.
  MatrixX<Scalar> factor() const {
    return basis * eigvals.cwiseSqrt().asDiagonal();
  }

  double trace() const { return eigvals.sum(); }
  double frob_norm() const { return eigvals.norm(); }
};

template <class Scalar>
constexpr Field field_of() {
  return std::is_same_v<Scalar, double> ? Field::Real : Field::Complex;
}

/// Sigma = X X^H with X an n x r standard Gaussian matrix, stored in EVD form.
template <class Scalar>
CovarianceModel<Scalar> gen_random_lowrank(int n, int r, std::uint64_t seed) {
  if (r < 1 || r > n) throw std::invalid_argument("rank out of range");
  Rng rng(seed);
  MatrixX<Scalar> X = rng.gaussian_matrix<Scalar>(n, r);
  Eigen::JacobiSVD<MatrixX<Scalar>> svd(X, Eigen::ComputeThinU);

  CovarianceModel<Scalar> model;
  model.n = n;
  model.r = r;
  model.basis = svd.matrixU();
  model.eigvals = svd.singularValues().cwiseAbs2();
  detail::canonicalize_columns(model.basis);
  return model;
}

/// Haar-like orthonormal basis with prescribed eigenvalues.
template <class Scalar>
CovarianceModel<Scalar> gen_orthonormal_model(int n, int r, const VectorXd& eigvals,
                                              std::uint64_t seed) {
  if (r < 1 || r > n) throw std::invalid_argument("rank out of range");
  if (eigvals.size() != r) throw std::invalid_argument("eigvals length must equal rank");
  for (int k = 0; k < r; ++k) {
    if (eigvals(k) <= 0.0) throw std::invalid_argument("eigenvalues must be positive");
    if (k > 0 && eigvals(k) > eigvals(k - 1) + 1e-15)
      throw std::invalid_argument("eigenvalues must be descending");
  }
  Rng rng(seed);
  MatrixX<Scalar> G = rng.gaussian_matrix<Scalar>(n, r);
  CovarianceModel<Scalar> model;
  model.n = n;
  model.r = r;
  model.basis = orthonormalize(G);
  if (model.basis.cols() != r) throw std::runtime_error("random basis was rank deficient");
  detail::canonicalize_columns(model.basis);
  model.eigvals = eigvals;
  return model;
}

/// Hermitian Toeplitz PSD covariance Sigma = sum_k p_k v(f_k) v(f_k)^H with
/// unit-norm complex-exponential columns v(f)[j] = exp(2*pi*i*j*f)/sqrt(n).
/// Stored in EVD form computed at construction.
inline CovarianceModel<Complex> gen_toeplitz_vandermonde(int n, const std::vector<double>& freqs,
                                                         const std::vector<double>& powers) {
  const int r = static_cast<int>(freqs.size());
  if (r < 1 || r > n) throw std::invalid_argument("frequency count out of range");
  if (powers.size() != freqs.size()) throw std::invalid_argument("freqs/powers length mismatch");
  for (int j = 0; j < r; ++j) {
    if (freqs[j] < 0.0 || freqs[j] >= 1.0) throw std::invalid_argument("frequency outside [0,1)");
    if (powers[j] <= 0.0) throw std::invalid_argument("powers must be positive");
    for (int k = j + 1; k < r; ++k)
      if (freqs[j] == freqs[k]) throw std::invalid_argument("duplicate frequencies");
  }

  MatrixX<Complex> V(n, r);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int k = 0; k < r; ++k)
    for (int j = 0; j < n; ++j)
      V(j, k) = std::polar(scale, 2.0 * M_PI * j * freqs[k]);

  MatrixX<Complex> sigma = MatrixX<Complex>::Zero(n, n);
  for (int k = 0; k < r; ++k)
    sigma += powers[k] * (V.col(k) * V.col(k).adjoint());
  // enforce exact Hermitian symmetry before the EVD
  sigma = ((sigma + sigma.adjoint()) / 2.0).eval();

  EigPair<Complex> eig = top_r_eig(sigma, r);
  CovarianceModel<Complex> model;
  model.n = n;
  model.r = r;
  model.basis = eig.vectors;
  model.eigvals = eig.values;
  return model;
}

/// Stateful i.i.d. sample generator: x_t = U (sqrt(lambda) .* g) + sigma * w.
template <class Scalar>
class SampleStream {
 public:
  SampleStream(CovarianceModel<Scalar> model, double noise_var, std::uint64_t seed)
      : model_(std::move(model)), noise_std_(std::sqrt(noise_var)), rng_(seed) {
    if (noise_var < 0.0) throw std::invalid_argument("noise variance must be nonnegative");
    sqrt_eigvals_ = model_.eigvals.cwiseSqrt();
  }

  VectorX<Scalar> draw() {
    VectorX<Scalar> g = rng_.gaussian_vector<Scalar>(model_.r);
    VectorX<Scalar> x = model_.basis * (sqrt_eigvals_.template cast<Scalar>().cwiseProduct(g));
    if (noise_std_ > 0.0) x += noise_std_ * rng_.gaussian_vector<Scalar>(model_.n);
    return x;
  }

  const CovarianceModel<Scalar>& model() const { return model_; }

 private:
  CovarianceModel<Scalar> model_;
  VectorXd sqrt_eigvals_;
  double noise_std_;
  Rng rng_;
};

// --- JSON serialization: {n, r, field, eigvals, basis (row-major [re,im])} ---

template <class Scalar>
nlohmann::json model_to_json(const CovarianceModel<Scalar>& model) {
  nlohmann::json j;
  j["n"] = model.n;
  j["r"] = model.r;
  j["field"] = field_name(field_of<Scalar>());
  j["eigvals"] = std::vector<double>(model.eigvals.data(), model.eigvals.data() + model.r);
  nlohmann::json basis = nlohmann::json::array();
  for (int i = 0; i < model.n; ++i)
    for (int k = 0; k < model.r; ++k) {
      const Complex v(model.basis(i, k));
      basis.push_back({v.real(), v.imag()});
    }
  j["basis"] = std::move(basis);
  return j;
}

template <class Scalar>
CovarianceModel<Scalar> model_from_json(const nlohmann::json& j) {
  CovarianceModel<Scalar> model;
  model.n = j.at("n").get<int>();
  model.r = j.at("r").get<int>();
  const std::string field = j.at("field").get<std::string>();
  if (field != field_name(field_of<Scalar>()))
    throw std::invalid_argument("model field mismatch: " + field);
  const auto eigvals = j.at("eigvals").get<std::vector<double>>();
  if (static_cast<int>(eigvals.size()) != model.r)
    throw std::invalid_argument("eigvals length mismatch");
  model.eigvals = Eigen::Map<const VectorXd>(eigvals.data(), model.r);
  const auto& basis = j.at("basis");
  if (static_cast<int>(basis.size()) != model.n * model.r)
    throw std::invalid_argument("basis size mismatch");
  model.basis.resize(model.n, model.r);
  std::size_t idx = 0;
  for (int i = 0; i < model.n; ++i)
    for (int k = 0; k < model.r; ++k, ++idx) {
      const double re = basis[idx][0].get<double>();
      const double im = basis[idx][1].get<double>();
      if constexpr (std::is_same_v<Scalar, double>) {
        if (im != 0.0) throw std::invalid_argument("complex entry in real model");
        model.basis(i, k) = re;
      } else {
        model.basis(i, k) = Complex(re, im);
      }
    }
  return model;
}

}  // namespace onebit

#endif  // ONEBIT_MODEL_HPP

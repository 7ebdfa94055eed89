#ifndef ONEBIT_SPECTRAL_HPP
#define ONEBIT_SPECTRAL_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace onebit {

template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Complex = std::complex<double>;

/// Real eigenvalues and an orthonormal eigenbasis of a symmetric/Hermitian
/// matrix, sorted by descending absolute eigenvalue.
template <class Scalar>
struct EigPair {
  VectorXd values;
  MatrixX<Scalar> vectors;
};

namespace detail {

inline double abs_scalar(double x) { return std::abs(x); }
inline double abs_scalar(const Complex& x) { return std::abs(x); }

// Rotate each column so its largest-magnitude entry is real and positive.
template <class Scalar>
void canonicalize_columns(MatrixX<Scalar>& V) {
  for (Eigen::Index j = 0; j < V.cols(); ++j) {
    Eigen::Index imax = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < V.rows(); ++i) {
      const double a = abs_scalar(V(i, j));
      if (a > best) {
        best = a;
        imax = i;
      }
    }
    if (best <= 0.0) continue;
    if constexpr (std::is_same_v<Scalar, double>) {
      if (V(imax, j) < 0.0) V.col(j) = -V.col(j);
    } else {
      const Complex pivot = V(imax, j);
      V.col(j) *= std::conj(pivot) / std::abs(pivot);
    }
  }
}

}  // namespace detail

template <class Scalar>
bool is_self_adjoint(const MatrixX<Scalar>& M, double rel_tol = 1e-12) {
  if (M.rows() != M.cols()) return false;
  const double scale = M.cwiseAbs().maxCoeff();
  const double dev = (M - M.adjoint()).cwiseAbs().maxCoeff();
  return dev <= rel_tol * (scale + 1.0);
}

template <class Scalar>
void require_self_adjoint(const MatrixX<Scalar>& M, double rel_tol = 1e-12) {
  if (!is_self_adjoint(M, rel_tol))
    throw std::invalid_argument("matrix is not symmetric/Hermitian within tolerance");
}

/// Full dense EVD of a symmetric/Hermitian matrix. Eigenvalues are returned in
/// absolute-descending order with canonical column signs.
template <class Scalar>
EigPair<Scalar> full_eig(const MatrixX<Scalar>& M) {
  require_self_adjoint(M);
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> solver(M);
  if (solver.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");

  const Eigen::Index n = M.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const VectorXd& ev = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    return std::abs(ev(i)) > std::abs(ev(j));
  });

  EigPair<Scalar> out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    out.values(j) = ev(order[static_cast<std::size_t>(j)]);
    out.vectors.col(j) = solver.eigenvectors().col(order[static_cast<std::size_t>(j)]);
  }
  detail::canonicalize_columns(out.vectors);
  return out;
}

/// The r eigenpairs of largest algebraic eigenvalue, reported in
/// absolute-descending order (matching full_eig when r = n).
template <class Scalar>
EigPair<Scalar> top_r_eig(const MatrixX<Scalar>& M, int r) {
  const Eigen::Index n = M.rows();
  if (r < 1 || r > n) throw std::invalid_argument("rank out of range");
  EigPair<Scalar> all = full_eig(M);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return all.values(i) > all.values(j); });
  order.resize(static_cast<std::size_t>(r));
  // keep the selected pairs in their absolute-descending positions
  std::sort(order.begin(), order.end());

  EigPair<Scalar> out;
  out.values.resize(r);
  out.vectors.resize(n, r);
  for (int j = 0; j < r; ++j) {
    out.values(j) = all.values(order[static_cast<std::size_t>(j)]);
    out.vectors.col(j) = all.vectors.col(order[static_cast<std::size_t>(j)]);
  }
  return out;
}

/// Orthonormal basis for the column span of B. Numerically dependent columns
/// are dropped when their residual falls below 1e-10 * (original norm + 1).
template <class Scalar>
MatrixX<Scalar> orthonormalize(const MatrixX<Scalar>& B) {
  const Eigen::Index n = B.rows();
  MatrixX<Scalar> Q(n, B.cols());
  Eigen::Index kept = 0;
  for (Eigen::Index j = 0; j < B.cols(); ++j) {
    VectorX<Scalar> v = B.col(j);
    const double orig_norm = v.norm();
    // two projection passes suppress loss of orthogonality
    for (int pass = 0; pass < 2; ++pass) {
      if (kept > 0) v -= Q.leftCols(kept) * (Q.leftCols(kept).adjoint() * v);
    }
    const double res = v.norm();
    if (res <= 1e-10 * (orig_norm + 1.0)) continue;
    Q.col(kept++) = v / res;
  }
  Q.conservativeResize(n, kept);
  return Q;
}

}  // namespace onebit

#endif  // ONEBIT_SPECTRAL_HPP

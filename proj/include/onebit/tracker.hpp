#ifndef ONEBIT_TRACKER_HPP
#define ONEBIT_TRACKER_HPP

#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "onebit/fusion.hpp"
#include "onebit/sensing.hpp"
#include "onebit/spectral.hpp"

namespace onebit {

/// Online principal-subspace tracker with Theta(n * r_est) memory.
///
/// Each arriving bit folds the rank-two term (y/m)(a a^H - b b^H) into the
/// tracked eigendecomposition: the sketch pair is split into its component in
/// the current span and an orthonormalized residual P, a small expanded
/// matrix Gamma is eigendecomposed, and the expansion is truncated back to the
/// r_est algebraically largest eigenpairs (the tracked matrix is PSD in
/// expectation). No n x n matrix is ever formed.
template <class Scalar>
class SubspaceTracker {
 public:
  SubspaceTracker(int n, int r_est)
      : n_(n), r_est_(r_est), basis_(n, 0), eigvals_(0) {
    if (r_est < 1 || r_est > n - 2)
      throw std::invalid_argument("tracked rank must satisfy 1 <= r_est <= n - 2");
  }

  /// Constant discount overriding the (m-1)/m reweighting; off by default.
  void set_discount(double eta) {
    if (eta <= 0.0 || eta >= 1.0) throw std::invalid_argument("discount must lie in (0,1)");
    discount_ = eta;
  }

  void update(const BitRecord& bit) {
    const SketchPair<Scalar> pair = make_sketch_pair<Scalar>(n_, bit.sketch_seed);
    update(bit.y, pair.a, pair.b);
  }

  void update(int y, const VectorX<Scalar>& a, const VectorX<Scalar>& b) {
    if (a.size() != n_ || b.size() != n_) throw std::invalid_argument("sketch dimension mismatch");
    ++m_;
    const double eta = discount_ > 0.0 ? discount_
                                       : static_cast<double>(m_ - 1) / static_cast<double>(m_);
    const double w = static_cast<double>(y) / static_cast<double>(m_);

    const Eigen::Index rc = basis_.cols();
    MatrixX<Scalar> K(n_, 2);
    K.col(0) = a;
    K.col(1) = b;

    MatrixX<Scalar> UtK = basis_.adjoint() * K;                  // rc x 2
    MatrixX<Scalar> R = K - basis_ * UtK;                        // residual, never forms I - UU^H
    MatrixX<Scalar> P = orthonormalize(R);                       // n x p, p <= 2
    const Eigen::Index p = P.cols();

    MatrixX<Scalar> B(rc + p, 2);
    B.topRows(rc) = UtK;
    if (p > 0) B.bottomRows(p) = P.adjoint() * R;

    MatrixX<Scalar> gamma = MatrixX<Scalar>::Zero(rc + p, rc + p);
    for (Eigen::Index j = 0; j < rc; ++j) gamma(j, j) = Scalar(eta * eigvals_(j));
    gamma += w * (B.col(0) * B.col(0).adjoint());
    gamma -= w * (B.col(1) * B.col(1).adjoint());
    gamma = ((gamma + gamma.adjoint()) / 2.0).eval();

    const EigPair<Scalar> eig = full_eig(gamma);  // absolute-descending

    // keep the r_est algebraically largest components (the tracked matrix is
    // PSD in expectation, so the dropped tail is the most-negative noise),
    // presented in the absolute-descending storage order and with numerically
    // zero entries discarded
    std::vector<Eigen::Index> order(static_cast<std::size_t>(eig.values.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index i, Eigen::Index j) { return eig.values(i) > eig.values(j); });
    order.resize(static_cast<std::size_t>(std::min<Eigen::Index>(r_est_, eig.values.size())));
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
      return std::abs(eig.values(i)) > std::abs(eig.values(j));
    });
    const double drop_tol = 1e-13 * (eig.values.size() > 0 ? std::abs(eig.values(0)) : 0.0);
    while (!order.empty() && std::abs(eig.values(order.back())) <= drop_tol) order.pop_back();
    const Eigen::Index keep = static_cast<Eigen::Index>(order.size());

    MatrixX<Scalar> expanded(n_, rc + p);
    expanded.leftCols(rc) = basis_;
    if (p > 0) expanded.rightCols(p) = P;
    MatrixX<Scalar> selected(rc + p, keep);
    VectorXd values(keep);
    for (Eigen::Index j = 0; j < keep; ++j) {
      selected.col(j) = eig.vectors.col(order[static_cast<std::size_t>(j)]);
      values(j) = eig.values(order[static_cast<std::size_t>(j)]);
    }
    basis_ = expanded * selected;
    eigvals_ = values;

    if (m_ % reorth_period_ == 0) reorthonormalize();
  }

  /// First r tracked directions by largest algebraic eigenvalue.
  SubspaceEstimate<Scalar> subspace(int r) const {
    if (r < 1 || r > basis_.cols()) throw std::invalid_argument("rank exceeds tracked columns");
    std::vector<Eigen::Index> order(static_cast<std::size_t>(basis_.cols()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index i, Eigen::Index j) { return eigvals_(i) > eigvals_(j); });
    SubspaceEstimate<Scalar> est;
    est.basis.resize(n_, r);
    est.eigvals.resize(r);
    for (int j = 0; j < r; ++j) {
      est.basis.col(j) = basis_.col(order[static_cast<std::size_t>(j)]);
      est.eigvals(j) = eigvals_(order[static_cast<std::size_t>(j)]);
    }
    return est;
  }

  /// The tracked approximation of J_m, materialized (for tests/diagnostics).
  MatrixX<Scalar> reconstruct() const {
    return basis_ * eigvals_.asDiagonal() * basis_.adjoint();
  }

  int n() const { return n_; }
  int tracked_rank() const { return r_est_; }
  long bits_consumed() const { return m_; }
  Eigen::Index columns() const { return basis_.cols(); }
  const MatrixX<Scalar>& basis() const { return basis_; }
  const VectorXd& eigvals() const { return eigvals_; }

  nlohmann::json checkpoint() const {
    nlohmann::json j;
    j["n"] = n_;
    j["r_est"] = r_est_;
    j["m"] = m_;
    j["eigvals"] = std::vector<double>(eigvals_.data(), eigvals_.data() + eigvals_.size());
    nlohmann::json basis = nlohmann::json::array();
    for (Eigen::Index i = 0; i < basis_.rows(); ++i)
      for (Eigen::Index k = 0; k < basis_.cols(); ++k) {
        const Complex v(basis_(i, k));
        basis.push_back({v.real(), v.imag()});
      }
    j["basis"] = std::move(basis);
    return j;
  }

  static SubspaceTracker restore(const nlohmann::json& j) {
    SubspaceTracker t(j.at("n").get<int>(), j.at("r_est").get<int>());
    t.m_ = j.at("m").get<long>();
    const auto eigvals = j.at("eigvals").get<std::vector<double>>();
    const Eigen::Index cols = static_cast<Eigen::Index>(eigvals.size());
    t.eigvals_ = Eigen::Map<const VectorXd>(eigvals.data(), cols);
    const auto& basis = j.at("basis");
    if (static_cast<Eigen::Index>(basis.size()) != t.n_ * cols)
      throw std::invalid_argument("checkpoint basis size mismatch");
    t.basis_.resize(t.n_, cols);
    std::size_t idx = 0;
    for (Eigen::Index i = 0; i < t.n_; ++i)
      for (Eigen::Index k = 0; k < cols; ++k, ++idx) {
        const double re = basis[idx][0].get<double>();
        const double im = basis[idx][1].get<double>();
        if constexpr (std::is_same_v<Scalar, double>) {
          if (im != 0.0) throw std::invalid_argument("complex entry in real checkpoint");
          t.basis_(i, k) = re;
        } else {
          t.basis_(i, k) = Complex(re, im);
        }
      }
    return t;
  }

 private:
  void reorthonormalize() {
    if (basis_.cols() == 0) return;
    // HouseholderQR keeps column order, unlike the rank-dropping Gram-Schmidt
    Eigen::HouseholderQR<MatrixX<Scalar>> qr(basis_);
    MatrixX<Scalar> Q = qr.householderQ() * MatrixX<Scalar>::Identity(n_, basis_.cols());
    basis_ = Q;
  }

  int n_;
  int r_est_;
  long m_ = 0;
  double discount_ = 0.0;
  long reorth_period_ = 256;
  MatrixX<Scalar> basis_;
  VectorXd eigvals_;
};

}  // namespace onebit

#endif  // ONEBIT_TRACKER_HPP

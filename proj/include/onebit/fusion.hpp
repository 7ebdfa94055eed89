#ifndef ONEBIT_FUSION_HPP
#define ONEBIT_FUSION_HPP

#include <stdexcept>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "onebit/sensing.hpp"
#include "onebit/spectral.hpp"

namespace onebit {

/// Sign-weighted sketch average J = (1/m) sum_i y_i (a_i a_i^H - b_i b_i^H).
template <class Scalar>
struct Surrogate {
  MatrixX<Scalar> J;
  long m = 0;
};

/// Orthonormal n x r basis with associated eigenvalues; the output of the
/// batch, convex and online estimators.
template <class Scalar>
struct SubspaceEstimate {
  MatrixX<Scalar> basis;
  VectorXd eigvals;

  int rank() const { return static_cast<int>(basis.cols()); }
};

template <class Scalar>
Surrogate<Scalar> build_surrogate(const std::vector<BitRecord>& bits, int n) {
  if (bits.empty()) throw std::invalid_argument("empty bit list");
  MatrixX<Scalar> J = MatrixX<Scalar>::Zero(n, n);
  for (const BitRecord& bit : bits) {
    const SketchPair<Scalar> pair = make_sketch_pair<Scalar>(n, bit.sketch_seed);
    const double y = static_cast<double>(bit.y);
    J.template selfadjointView<Eigen::Lower>().rankUpdate(pair.a, y);
    J.template selfadjointView<Eigen::Lower>().rankUpdate(pair.b, -y);
  }
  Surrogate<Scalar> s;
  s.m = static_cast<long>(bits.size());
  s.J = MatrixX<Scalar>(J.template selfadjointView<Eigen::Lower>()) / static_cast<double>(s.m);
  return s;
}

/// Truncated-EVD estimator: top-r algebraic eigenpairs of the surrogate.
template <class Scalar>
SubspaceEstimate<Scalar> estimate_subspace(const Surrogate<Scalar>& s, int r) {
  EigPair<Scalar> eig = top_r_eig(s.J, r);
  return SubspaceEstimate<Scalar>{std::move(eig.vectors), std::move(eig.values)};
}

/// Exact maximizer of <d, sigma> over {sigma >= 0, |sigma|_2 <= 1,
/// |sigma|_1 <= sqrt(r)} for the positive part of the spectrum d.
/// Thresholding scheme: if the l2-normalized positive part is l1-feasible it
/// is optimal; otherwise shrink by a threshold found by bisection on the
/// continuous, decreasing map theta -> |sigma(theta)|_1.
inline VectorXd max_energy_spectrum(const VectorXd& d, int r) {
  const Eigen::Index n = d.size();
  const double l1_budget = std::sqrt(static_cast<double>(r));
  VectorXd dpos = d.cwiseMax(0.0);
  const double l2 = dpos.norm();
  if (l2 == 0.0) return VectorXd::Zero(n);

  VectorXd sigma = dpos / l2;
  if (sigma.lpNorm<1>() <= l1_budget) return sigma;

  auto l1_of = [&](double theta) {
    VectorXd shrunk = (dpos.array() - theta).max(0.0);
    const double nrm = shrunk.norm();
    return nrm == 0.0 ? 0.0 : shrunk.lpNorm<1>() / nrm;
  };

  double lo = 0.0, hi = dpos.maxCoeff();
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (l1_of(mid) > l1_budget)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-10 * (1.0 + hi)) break;
  }
  const double theta = 0.5 * (lo + hi);
  VectorXd shrunk = (dpos.array() - theta).max(0.0);
  sigma = shrunk / shrunk.norm();
  if (sigma.lpNorm<1>() <= l1_budget * (1.0 + 1e-8)) return sigma;

  // Tied eigenvalues at the threshold make |sigma(theta)|_1 jump across the
  // budget; split the budget over the tie group instead. Any split with
  // |sigma|_1 = budget is optimal since all tied directions carry equal gain.
  const double tie_tol = 1e-9 * (1.0 + hi);
  std::vector<Eigen::Index> above, tied;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (dpos(i) > theta + tie_tol)
      above.push_back(i);
    else if (dpos(i) > theta - tie_tol && dpos(i) > 0.0)
      tied.push_back(i);
  }
  VectorXd raw = VectorXd::Zero(n);
  for (Eigen::Index i : above) raw(i) = dpos(i) - theta;
  if (above.empty()) {
    const int keep = std::min<int>(static_cast<int>(tied.size()), r);
    for (int j = 0; j < keep; ++j) raw(tied[static_cast<std::size_t>(j)]) = 1.0;
    return raw / raw.norm();
  }
  auto ratio = [&](double t) {
    double l1 = raw.lpNorm<1>() + t * static_cast<double>(tied.size());
    double l2 = std::sqrt(raw.squaredNorm() + t * t * static_cast<double>(tied.size()));
    return l1 / l2;
  };
  double tlo = 0.0, thi = raw.maxCoeff() + 1.0;
  for (int it = 0; it < 200 && ratio(thi) < l1_budget; ++it) thi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double tmid = 0.5 * (tlo + thi);
    if (ratio(tmid) < l1_budget)
      tlo = tmid;
    else
      thi = tmid;
  }
  for (Eigen::Index i : tied) raw(i) = 0.5 * (tlo + thi);
  return raw / raw.norm();
}

/// Convex alternative: maximize sum_i y_i <W_i, Sigma> over PSD matrices with
/// |Sigma|_F <= 1 and |Sigma|_* <= sqrt(r). The objective is linear, so the
/// global maximizer shares the surrogate's eigenbasis and reduces to
/// max_energy_spectrum on its eigenvalues.
template <class Scalar>
std::pair<MatrixX<Scalar>, SubspaceEstimate<Scalar>> convex_estimate(
    const std::vector<BitRecord>& bits, int n, int r) {
  if (r < 1 || r > n) throw std::invalid_argument("rank out of range");
  const Surrogate<Scalar> s = build_surrogate<Scalar>(bits, n);
  const EigPair<Scalar> eig = full_eig(s.J);
  const VectorXd sigma = max_energy_spectrum(eig.values, r);
  MatrixX<Scalar> sigma_hat = eig.vectors * sigma.asDiagonal() * eig.vectors.adjoint();
  sigma_hat = ((sigma_hat + sigma_hat.adjoint()) / 2.0).eval();
  return {sigma_hat, estimate_subspace(Surrogate<Scalar>{sigma_hat, s.m}, r)};
}

template <class Scalar>
nlohmann::json subspace_to_json(const SubspaceEstimate<Scalar>& est) {
  nlohmann::json j;
  j["n"] = static_cast<int>(est.basis.rows());
  j["r"] = est.rank();
  j["eigvals"] = std::vector<double>(est.eigvals.data(), est.eigvals.data() + est.eigvals.size());
  nlohmann::json basis = nlohmann::json::array();
  for (Eigen::Index i = 0; i < est.basis.rows(); ++i)
    for (Eigen::Index k = 0; k < est.basis.cols(); ++k) {
      const Complex v(est.basis(i, k));
      basis.push_back({v.real(), v.imag()});
    }
  j["basis"] = std::move(basis);
  return j;
}

}  // namespace onebit

#endif  // ONEBIT_FUSION_HPP

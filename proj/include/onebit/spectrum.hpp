#ifndef ONEBIT_SPECTRUM_HPP
#define ONEBIT_SPECTRUM_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

#include "onebit/fusion.hpp"
#include "onebit/model.hpp"
#include "onebit/tracker.hpp"

namespace onebit {

/// Recovered line-spectrum frequencies (cycles/sample, in [0,1)) with
/// per-frequency power proxies.
struct FrequencyEstimate {
  std::vector<double> freqs;
  std::vector<double> amplitudes;
  int r_used = 0;
};

/// Wrap-around distance on the frequency circle [0,1).
inline double circular_distance(double f1, double f2) {
  double d = std::abs(f1 - f2);
  d -= std::floor(d);
  return std::min(d, 1.0 - d);
}

/// Total circular distance of the best assignment of estimates to true
/// frequencies (greedy over all permutations; sizes here are tiny).
inline double best_match_distance(const std::vector<double>& truth,
                                  const std::vector<double>& est) {
  std::vector<int> perm(est.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  std::sort(perm.begin(), perm.end());
  do {
    double total = 0.0;
    for (std::size_t j = 0; j < truth.size() && j < est.size(); ++j)
      total += circular_distance(truth[j], est[static_cast<std::size_t>(perm[j])]);
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// Smallest circular distance from f to any entry of est.
inline double nearest_estimate_distance(double f, const std::vector<double>& est) {
  double best = std::numeric_limits<double>::infinity();
  for (double e : est) best = std::min(best, circular_distance(f, e));
  return best;
}

/// ESPRIT on an estimated principal subspace: least-squares solution of the
/// shift-invariance equation on the first r columns, frequencies from the
/// phases of the small non-symmetric eigenproblem.
///
/// Amplitudes are a nonnegative least-squares fit of unit-norm Vandermonde
/// modes to the subspace-weighted spectrum (the paper plots amplitudes
/// without defining them; this proxy is ours).
inline FrequencyEstimate esprit(const SubspaceEstimate<Complex>& est, int r) {
  const Eigen::Index n = est.basis.rows();
  if (r < 1 || r > est.basis.cols()) throw std::invalid_argument("model order out of range");
  if (n < r + 1) throw std::invalid_argument("dimension too small for shift invariance");

  const MatrixX<Complex> U = est.basis.leftCols(r);
  const MatrixX<Complex> upper = U.topRows(n - 1);
  const MatrixX<Complex> lower = U.bottomRows(n - 1);
  Eigen::ColPivHouseholderQR<MatrixX<Complex>> qr(upper);
  if (qr.rank() < r) throw std::runtime_error("shift-invariance system is rank deficient");
  const MatrixX<Complex> psi = qr.solve(lower);

  Eigen::ComplexEigenSolver<MatrixX<Complex>> solver(psi);
  if (solver.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");

  FrequencyEstimate out;
  out.r_used = r;
  out.freqs.resize(static_cast<std::size_t>(r));
  for (int j = 0; j < r; ++j) {
    double f = std::arg(solver.eigenvalues()(j)) / (2.0 * M_PI);
    f -= std::floor(f);
    if (f >= 1.0) f = 0.0;
    out.freqs[static_cast<std::size_t>(j)] = f;
  }

  // fit p >= 0 in  sum_k p_k v(f_k) v(f_k)^H  ~=  U diag(pi) U^H
  MatrixX<Complex> V(n, r);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int k = 0; k < r; ++k)
    for (Eigen::Index j = 0; j < n; ++j)
      V(j, k) = std::polar(scale, 2.0 * M_PI * static_cast<double>(j) *
                                      out.freqs[static_cast<std::size_t>(k)]);
  MatrixXd gram(r, r);
  for (int jj = 0; jj < r; ++jj)
    for (int kk = 0; kk < r; ++kk) gram(jj, kk) = std::norm(Complex(V.col(jj).dot(V.col(kk))));
  VectorXd rhs(r);
  const MatrixX<Complex> proj = V.adjoint() * U;  // r x r
  for (int jj = 0; jj < r; ++jj) {
    double acc = 0.0;
    for (int i = 0; i < r; ++i) acc += est.eigvals(i) * std::norm(proj(jj, i));
    rhs(jj) = acc;
  }
  VectorXd p = gram.ldlt().solve(rhs).cwiseMax(0.0);
  out.amplitudes.assign(p.data(), p.data() + r);
  return out;
}

/// One frequency snapshot per stride bits: population bits from the Toeplitz
/// model stream through the tracker, ESPRIT runs on the current subspace.
struct TrackPoint {
  long bit_index = 0;
  FrequencyEstimate estimate;
};

inline std::vector<TrackPoint> spectrum_track_run(const CovarianceModel<Complex>& model,
                                                  long m_max, int r_est, long stride,
                                                  std::uint64_t seed) {
  if (stride < 1) throw std::invalid_argument("stride must be positive");
  SubspaceTracker<Complex> tracker(model.n, r_est);
  std::vector<TrackPoint> out;
  out.reserve(static_cast<std::size_t>((m_max + stride - 1) / stride));
  for (long i = 0; i < m_max; ++i) {
    const std::uint64_t pair_seed = derive_seed(seed, static_cast<std::uint64_t>(i));
    const SketchPair<Complex> pair = make_sketch_pair<Complex>(model.n, pair_seed);
    tracker.update(population_bit(pair, model), pair.a, pair.b);
    if ((i + 1) % stride == 0 || i + 1 == m_max) {
      const int cols = static_cast<int>(tracker.columns());
      if (cols >= 1) {
        const int order = std::min(r_est, cols);
        TrackPoint pt;
        pt.bit_index = i + 1;
        pt.estimate = esprit(tracker.subspace(order), order);
        out.push_back(std::move(pt));
      }
    }
  }
  return out;
}

}  // namespace onebit

#endif  // ONEBIT_SPECTRUM_HPP

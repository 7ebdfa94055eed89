#ifndef ONEBIT_BOUNDS_HPP
#define ONEBIT_BOUNDS_HPP

#include <cmath>
#include <stdexcept>

#include "onebit/rng.hpp"
#include "onebit/spectral.hpp"

namespace onebit {

/// Spectral-gap lower bounds for the expected surrogate's principal diagonal,
/// plus an optional Monte Carlo estimate of its exact value.
struct BoundReport {
  int r = 0;
  double kappa = 1.0;
  double bound_exp = 1.0;        // (1/(1+kappa))^(r-1)
  double bound_poly = 1.0;       // exp(-kappa)/(9r)
  double alpha = 1.0;            // max of the two; 1 exactly when r = 1
  double mc_value = 0.0;
  double mc_stderr = 0.0;
  long trials = 0;
};

/// Closed-form lower bounds on u_k^T E[J] u_k for eigenvalues lambda and
/// principal index k (kappa = lambda_1 / lambda_k).
inline BoundReport alpha_lower_bound(const VectorXd& eigvals, int k) {
  const int r = static_cast<int>(eigvals.size());
  if (k < 1 || k > r) throw std::invalid_argument("index out of range");
  for (int j = 0; j < r; ++j)
    if (eigvals(j) <= 0.0) throw std::invalid_argument("eigenvalues must be positive");

  BoundReport rep;
  rep.r = r;
  rep.kappa = eigvals(0) / eigvals(k - 1);
  if (r == 1) {
    rep.bound_exp = rep.bound_poly = rep.alpha = 1.0;
    return rep;
  }
  rep.bound_exp = std::pow(1.0 / (1.0 + rep.kappa), r - 1);
  rep.bound_poly = std::exp(-rep.kappa) / (9.0 * r);
  rep.alpha = std::max(rep.bound_exp, rep.bound_poly);
  return rep;
}

namespace detail {

// One realized projected-energy difference V = |<a,u>|^2 - |<b,u>|^2 for
// independent standard Gaussian sketches; drawn directly in the eigenbasis.
template <class Scalar>
double draw_energy_diff(Rng& rng) {
  const double pa = std::norm(Complex(rng.gaussian<Scalar>()));
  const double pb = std::norm(Complex(rng.gaussian<Scalar>()));
  return pa - pb;
}

}  // namespace detail

/// Monte Carlo estimate of u_k^T E[J] u_k from realized Gaussian sketches.
/// The sign statistic is sampled directly, so the estimate is valid in both
/// real and complex modes independent of any distributional identity.
template <class Scalar>
BoundReport expected_diag_mc(const VectorXd& eigvals, int k, long trials, std::uint64_t seed) {
  if (trials < 1000) throw std::invalid_argument("at least 1000 trials required");
  BoundReport rep = alpha_lower_bound(eigvals, k);
  const int r = rep.r;
  Rng rng(seed);
  double sum = 0.0, sum_sq = 0.0;
  for (long t = 0; t < trials; ++t) {
    double gap = 0.0, vk = 0.0;
    for (int j = 0; j < r; ++j) {
      const double v = detail::draw_energy_diff<Scalar>(rng);
      gap += eigvals(j) * v;
      if (j == k - 1) vk = v;
    }
    const double sample = (gap > 0.0 ? 1.0 : -1.0) * vk;
    sum += sample;
    sum_sq += sample * sample;
  }
  const double mean = sum / static_cast<double>(trials);
  const double var = (sum_sq / static_cast<double>(trials)) - mean * mean;
  rep.mc_value = mean;
  rep.mc_stderr = std::sqrt(std::max(var, 0.0) / static_cast<double>(trials));
  rep.trials = trials;
  return rep;
}

/// Monte Carlo estimate of v^T E[J] v for a direction v orthogonal to the
/// principal subspace; returns (mean, stderr). The lemma value is 0.
template <class Scalar>
std::pair<double, double> minor_diag_mc(const VectorXd& eigvals, long trials, std::uint64_t seed) {
  if (trials < 1000) throw std::invalid_argument("at least 1000 trials required");
  const int r = static_cast<int>(eigvals.size());
  Rng rng(seed);
  double sum = 0.0, sum_sq = 0.0;
  for (long t = 0; t < trials; ++t) {
    double gap = 0.0;
    for (int j = 0; j < r; ++j) gap += eigvals(j) * detail::draw_energy_diff<Scalar>(rng);
    const double v_orth = detail::draw_energy_diff<Scalar>(rng);
    const double sample = (gap > 0.0 ? 1.0 : -1.0) * v_orth;
    sum += sample;
    sum_sq += sample * sample;
  }
  const double mean = sum / static_cast<double>(trials);
  const double var = (sum_sq / static_cast<double>(trials)) - mean * mean;
  return {mean, std::sqrt(std::max(var, 0.0) / static_cast<double>(trials))};
}

}  // namespace onebit

#endif  // ONEBIT_BOUNDS_HPP

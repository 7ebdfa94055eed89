#include <catch2/catch_amalgamated.hpp>

#include "onebit/fusion.hpp"
#include "onebit/harness.hpp"
#include "onebit/model.hpp"

using namespace onebit;

namespace {

// naive per-element double-loop oracle for the surrogate
MatrixXd naive_surrogate(const std::vector<BitRecord>& bits, int n) {
  MatrixXd J = MatrixXd::Zero(n, n);
  for (const auto& bit : bits) {
    const auto pair = make_sketch_pair<double>(n, bit.sketch_seed);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        J(i, j) += bit.y * (pair.a(i) * pair.a(j) - pair.b(i) * pair.b(j));
  }
  return J / static_cast<double>(bits.size());
}

double convex_objective(const MatrixXd& J, const MatrixXd& sigma) {
  return (J.array() * sigma.array()).sum();
}

// projection of a symmetric matrix onto {PSD, |.|_F <= 1, |.|_* <= sqrt(r)}
// via alternating projections; good enough for an ascent oracle step
MatrixXd project_feasible(const MatrixXd& S, int r) {
  MatrixXd X = (S + S.transpose()) / 2.0;
  for (int it = 0; it < 200; ++it) {
    auto eig = full_eig(X);
    VectorXd d = eig.values.cwiseMax(0.0);
    const double l1 = d.lpNorm<1>();
    const double budget = std::sqrt(static_cast<double>(r));
    if (l1 > budget) {
      // simplex-style shift
      VectorXd sorted = d;
      std::sort(sorted.data(), sorted.data() + sorted.size(), std::greater<double>());
      double cum = 0.0, theta = 0.0;
      for (int k = 0; k < sorted.size(); ++k) {
        cum += sorted(k);
        const double cand = (cum - budget) / (k + 1);
        if (k + 1 == sorted.size() || sorted(k + 1) <= cand) {
          theta = cand;
          break;
        }
      }
      d = (d.array() - theta).max(0.0);
    }
    if (d.norm() > 1.0) d /= d.norm();
    MatrixXd next = eig.vectors * d.asDiagonal() * eig.vectors.transpose();
    next = (next + next.transpose()) / 2.0;
    if ((next - X).norm() < 1e-12) return next;
    X = next;
  }
  return X;
}

// projected gradient ascent over full PSD matrices (the objective is linear,
// so this climbs to the boundary maximizer)
double projected_ascent_objective(const MatrixXd& J, int r) {
  MatrixXd X = MatrixXd::Zero(J.rows(), J.cols());
  double step = 0.5;
  double best = -1e300;
  for (int it = 0; it < 3000; ++it) {
    X = project_feasible(X + step * J, r);
    best = std::max(best, convex_objective(J, X));
  }
  return best;
}

}  // namespace

TEST_CASE("surrogate of a single axis-aligned bit") {
  // m = 1, y = +1, a = e1, b = e2 -> J = e1 e1^T - e2 e2^T. Constructed
  // directly rather than via seeds.
  SketchPair<double> pair;
  pair.a = Eigen::Vector3d(1.0, 0.0, 0.0);
  pair.b = Eigen::Vector3d(0.0, 1.0, 0.0);
  MatrixXd J = pair.a * pair.a.transpose() - pair.b * pair.b.transpose();
  REQUIRE(J(0, 0) == 1.0);
  REQUIRE(J(1, 1) == -1.0);
  REQUIRE(J.cwiseAbs().sum() == 2.0);
}

TEST_CASE("build_surrogate matches the naive oracle") {
  const auto model = gen_random_lowrank<double>(6, 2, 201);
  const auto bits = make_population_bits(model, 3, 202);
  const auto s = build_surrogate<double>(bits, 6);
  REQUIRE(s.m == 3);
  REQUIRE((s.J - naive_surrogate(bits, 6)).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE((s.J - s.J.transpose()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("build_surrogate trace consistency") {
  const auto model = gen_random_lowrank<double>(8, 3, 203);
  const auto bits = make_population_bits(model, 40, 204);
  const auto s = build_surrogate<double>(bits, 8);
  double expected = 0.0;
  for (const auto& bit : bits) {
    const auto pair = make_sketch_pair<double>(8, bit.sketch_seed);
    expected += bit.y * (pair.a.squaredNorm() - pair.b.squaredNorm());
  }
  expected /= static_cast<double>(bits.size());
  REQUIRE(s.J.trace() == Catch::Approx(expected).margin(1e-9));
}

TEST_CASE("build_surrogate is linear under global sign flip") {
  const auto model = gen_random_lowrank<double>(5, 2, 205);
  auto bits = make_population_bits(model, 20, 206);
  const auto s = build_surrogate<double>(bits, 5);
  for (auto& bit : bits) bit.y = -bit.y;
  const auto neg = build_surrogate<double>(bits, 5);
  REQUIRE((s.J + neg.J).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("build_surrogate rejects empty input") {
  REQUIRE_THROWS_AS(build_surrogate<double>({}, 5), std::invalid_argument);
}

TEST_CASE("build_surrogate accumulation is order independent") {
  const auto model = gen_random_lowrank<double>(6, 2, 207);
  auto bits = make_population_bits(model, 64, 208);
  const auto fwd = build_surrogate<double>(bits, 6);
  std::reverse(bits.begin(), bits.end());
  const auto rev = build_surrogate<double>(bits, 6);
  REQUIRE((fwd.J - rev.J).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("estimate_subspace picks algebraic-largest directions") {
  Surrogate<double> s;
  s.J = Eigen::Vector3d(1.0, 0.5, -0.2).asDiagonal();
  s.m = 1;
  const auto est = estimate_subspace(s, 1);
  REQUIRE(std::abs(est.basis(0, 0)) == Catch::Approx(1.0));
  REQUIRE(est.eigvals(0) == Catch::Approx(1.0));
}

TEST_CASE("estimate_subspace with full rank covers everything") {
  const auto model = gen_random_lowrank<double>(6, 2, 209);
  const auto bits = make_population_bits(model, 30, 210);
  const auto est = estimate_subspace(build_surrogate<double>(bits, 6), 6);
  REQUIRE(nmse(est, model) < 1e-12);
}

TEST_CASE("rank-one truth recovered from many exact bits") {
  const auto model = gen_random_lowrank<double>(10, 1, 211);
  const auto bits = make_population_bits(model, 50000, 212);
  const auto est = estimate_subspace(build_surrogate<double>(bits, 10), 1);
  REQUIRE(nmse(est, model) < 0.05);
}

TEST_CASE("surrogate concentrates as m grows") {
  // operator-norm distance to a 4x-larger bit pool shrinks roughly as
  // sqrt(4) = 2 when m quadruples
  const auto model = gen_random_lowrank<double>(20, 3, 213);
  std::vector<double> ratios;
  for (int s = 0; s < 20; ++s) {
    const auto big = make_population_bits(model, 32000, derive_seed(214, s));
    std::vector<BitRecord> m1(big.begin(), big.begin() + 2000);
    std::vector<BitRecord> m4(big.begin(), big.begin() + 8000);
    std::vector<BitRecord> ref(big.begin() + 8000, big.end());  // independent proxy for E[J]
    const MatrixXd Jref = build_surrogate<double>(ref, 20).J;
    const double d1 = (build_surrogate<double>(m1, 20).J - Jref).operatorNorm();
    const double d4 = (build_surrogate<double>(m4, 20).J - Jref).operatorNorm();
    ratios.push_back(d1 / d4);
  }
  std::sort(ratios.begin(), ratios.end());
  const double median = ratios[ratios.size() / 2];
  REQUIRE(median >= 1.6);
  REQUIRE(median <= 2.6);
}

TEST_CASE("minor-space quadratic form vanishes in expectation") {
  const auto model = gen_random_lowrank<double>(10, 3, 215);
  // a unit direction orthogonal to the principal subspace
  Rng rng(216);
  VectorXd v = rng.gaussian_vector<double>(10);
  v -= model.basis * (model.basis.transpose() * v);
  v.normalize();

  const long m = 100000;
  const auto bits = make_population_bits(model, m, 217);
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& bit : bits) {
    const auto pair = make_sketch_pair<double>(10, bit.sketch_seed);
    const double pa = pair.a.dot(v), pb = pair.b.dot(v);
    const double sample = bit.y * (pa * pa - pb * pb);
    sum += sample;
    sum_sq += sample * sample;
  }
  const double mean = sum / m;
  const double stderr_ = std::sqrt((sum_sq / m - mean * mean) / m);
  REQUIRE(std::abs(mean) < 3.0 * stderr_);
}

TEST_CASE("max_energy_spectrum closed-form cases") {
  // single positive direction, l2-active, l1 slack
  VectorXd d1 = Eigen::Vector3d(1.0, 0.0, 0.0);
  const VectorXd s1 = max_energy_spectrum(d1, 1);
  REQUIRE((s1 - d1).cwiseAbs().maxCoeff() < 1e-12);

  // symmetric split when the l1 budget is generous
  VectorXd d2 = VectorXd::Zero(6);
  d2(0) = d2(1) = 1.0;
  const VectorXd s2 = max_energy_spectrum(d2, 4);
  REQUIRE(s2(0) == Catch::Approx(1.0 / std::sqrt(2.0)));
  REQUIRE(s2(1) == Catch::Approx(1.0 / std::sqrt(2.0)));
  REQUIRE(s2.tail(4).cwiseAbs().maxCoeff() == 0.0);

  // all-negative spectrum yields the zero vector
  REQUIRE(max_energy_spectrum(Eigen::Vector3d(-1.0, -2.0, -0.5), 2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("max_energy_spectrum beats a dense grid oracle") {
  Rng rng(221);
  const double budget2 = std::sqrt(2.0);
  for (int trial = 0; trial < 5; ++trial) {
    VectorXd d = rng.gaussian_vector<double>(4);
    const VectorXd sigma = max_energy_spectrum(d, 2);
    REQUIRE(sigma.minCoeff() >= 0.0);
    REQUIRE(sigma.norm() <= 1.0 + 1e-9);
    REQUIRE(sigma.lpNorm<1>() <= budget2 + 1e-9);
    const double ours = d.dot(sigma);

    // dense grid over the nonnegative l2 ball in 4 dims (about 10^6 points)
    double best = 0.0;
    const int steps = 40;
    for (int i0 = 0; i0 <= steps; ++i0)
      for (int i1 = 0; i1 <= steps; ++i1)
        for (int i2 = 0; i2 <= steps; ++i2)
          for (int i3 = 0; i3 <= steps; ++i3) {
            Eigen::Vector4d g(i0, i1, i2, i3);
            g /= static_cast<double>(steps);
            if (g.norm() > 1.0 || g.lpNorm<1>() > budget2) continue;
            best = std::max(best, d.dot(g));
          }
    REQUIRE(ours >= best - 1e-4 * std::max(1.0, std::abs(best)));
  }
}

TEST_CASE("convex maximizer beats the projected-ascent oracle at n=3") {
  for (int trial = 0; trial < 4; ++trial) {
    const auto model = gen_random_lowrank<double>(3, 1, derive_seed(222, trial));
    const auto bits = make_population_bits(model, 25, derive_seed(223, trial));
    const auto s = build_surrogate<double>(bits, 3);
    for (int r = 1; r <= 2; ++r) {
      const auto [sigma_hat, est] = convex_estimate<double>(bits, 3, r);
      const double ours = convex_objective(s.J, sigma_hat);
      const double oracle = projected_ascent_objective(s.J, r);
      REQUIRE(ours >= oracle - 1e-4 * std::max(1.0, std::abs(oracle)));

      // feasibility
      const auto eig = full_eig(sigma_hat);
      REQUIRE(eig.values.minCoeff() >= -1e-10);
      REQUIRE(sigma_hat.norm() <= 1.0 + 1e-9);
      REQUIRE(eig.values.cwiseMax(0.0).lpNorm<1>() <= std::sqrt(static_cast<double>(r)) + 1e-9);
    }
  }
}

TEST_CASE("convex estimate tracks truncated EVD accuracy") {
  std::vector<double> evd, cvx;
  for (int trial = 0; trial < 10; ++trial) {
    const auto model = gen_random_lowrank<double>(40, 3, derive_seed(224, trial));
    const auto bits = make_population_bits(model, 2000, derive_seed(225, trial));
    evd.push_back(nmse(estimate_subspace(build_surrogate<double>(bits, 40), 3), model));
    cvx.push_back(nmse(convex_estimate<double>(bits, 40, 3).second, model));
  }
  std::sort(evd.begin(), evd.end());
  std::sort(cvx.begin(), cvx.end());
  REQUIRE(cvx[5] <= 1.5 * evd[5] + 0.02);
}

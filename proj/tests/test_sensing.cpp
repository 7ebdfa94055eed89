#include <sstream>

#include <catch2/catch_amalgamated.hpp>

#include "onebit/model.hpp"
#include "onebit/sensing.hpp"

using namespace onebit;

TEST_CASE("new sensor starts empty and is deterministic") {
  SensorState<double> s(5, 77);
  REQUIRE(s.count() == 0);
  REQUIRE(s.energy_a() == 0.0);
  REQUIRE(s.energy_b() == 0.0);
  SensorState<double> t(5, 77);
  REQUIRE((s.pair().a - t.pair().a).norm() == 0.0);
  REQUIRE((s.pair().b - t.pair().b).norm() == 0.0);
}

TEST_CASE("sketch vectors have chi-square norms on average") {
  const int n = 16;
  double total = 0.0;
  const int count = 10000;
  for (int i = 0; i < count; ++i)
    total += make_sketch_pair<double>(n, static_cast<std::uint64_t>(i)).a.squaredNorm();
  REQUIRE(total / count == Catch::Approx(static_cast<double>(n)).epsilon(0.05));
}

TEST_CASE("complex sketch entries are unit-variance circular") {
  const int n = 16;
  double total = 0.0;
  Complex mean_sq = 0.0;
  const int count = 10000;
  for (int i = 0; i < count; ++i) {
    const auto pair = make_sketch_pair<Complex>(n, static_cast<std::uint64_t>(i));
    total += pair.a.squaredNorm();
    mean_sq += pair.a.array().square().sum();
  }
  REQUIRE(total / count == Catch::Approx(static_cast<double>(n)).epsilon(0.05));
  // pseudo-variance E[z^2] vanishes for circular symmetry
  REQUIRE(std::abs(mean_sq) / (count * n) < 0.05);
}

TEST_CASE("ingest matches the recursive energy mean") {
  SensorState<double> s(3, 1);
  // first sample: U = |<a, x>|^2
  Eigen::Vector3d x(2.0, 0.0, 0.0);
  s.ingest(x);
  REQUIRE(s.count() == 1);
  const double a0 = s.pair().a(0);
  REQUIRE(s.energy_a() == Catch::Approx(4.0 * a0 * a0));
}

TEST_CASE("ingest rejects wrong dimension") {
  SensorState<double> s(3, 1);
  REQUIRE_THROWS_AS(s.ingest(Eigen::Vector2d(1.0, 2.0)), std::invalid_argument);
}

TEST_CASE("streaming average equals the batch mean") {
  const auto model = gen_random_lowrank<double>(8, 2, 5);
  SampleStream<double> stream(model, 0.1, 6);
  SensorState<double> sensor(8, 9);
  std::vector<VectorXd> samples;
  for (int t = 0; t < 1000; ++t) {
    samples.push_back(stream.draw());
    sensor.ingest(samples.back());
  }
  double batch_a = 0.0, batch_b = 0.0;
  for (const auto& x : samples) {
    batch_a += std::pow(sensor.pair().a.dot(x), 2);
    batch_b += std::pow(sensor.pair().b.dot(x), 2);
  }
  batch_a /= 1000.0;
  batch_b /= 1000.0;
  REQUIRE(sensor.energy_a() == Catch::Approx(batch_a).epsilon(1e-9));
  REQUIRE(sensor.energy_b() == Catch::Approx(batch_b).epsilon(1e-9));

  // permutation invariance of the mean
  SensorState<double> reversed(8, 9);
  for (auto it = samples.rbegin(); it != samples.rend(); ++it) reversed.ingest(*it);
  REQUIRE(reversed.energy_a() == Catch::Approx(sensor.energy_a()).epsilon(1e-12));
}

TEST_CASE("emit_bit sign cases") {
  SensorState<double> s(2, 3);
  REQUIRE_THROWS_AS(s.emit_bit(), std::logic_error);
  s.ingest(Eigen::Vector2d(0.0, 0.0));
  // tie U = V = 0 maps to -1
  REQUIRE(s.emit_bit().y == -1);
}

TEST_CASE("emitted bit equals the sign of <W, sample covariance>") {
  const auto model = gen_random_lowrank<double>(6, 2, 11);
  for (int trial = 0; trial < 20; ++trial) {
    SampleStream<double> stream(model, 0.0, derive_seed(50, trial));
    SensorState<double> sensor(6, derive_seed(60, trial));
    MatrixXd sample_cov = MatrixXd::Zero(6, 6);
    for (int t = 0; t < 25; ++t) {
      const VectorXd x = stream.draw();
      sensor.ingest(x);
      sample_cov += x * x.transpose();
    }
    sample_cov /= 25.0;
    const auto& p = sensor.pair();
    const MatrixXd W = p.a * p.a.transpose() - p.b * p.b.transpose();
    const double inner = (W.array() * sample_cov.array()).sum();
    REQUIRE(sensor.emit_bit().y == (inner > 0.0 ? +1 : -1));
  }
}

TEST_CASE("population_bit basic cases") {
  CovarianceModel<double> model;
  model.n = 2;
  model.r = 2;
  model.basis = MatrixXd::Identity(2, 2);
  model.eigvals = Eigen::Vector2d(2.0, 1.0);

  SketchPair<double> pair;
  pair.a = Eigen::Vector2d(1.0, 0.0);
  pair.b = Eigen::Vector2d(0.0, 1.0);
  REQUIRE(population_bit(pair, model) == +1);

  pair.b = pair.a;  // tie
  REQUIRE(population_bit(pair, model) == -1);
}

TEST_CASE("population_bit agrees with the materialized covariance") {
  for (int trial = 0; trial < 50; ++trial) {
    const auto model = gen_random_lowrank<double>(7, 3, derive_seed(70, trial));
    const auto pair = make_sketch_pair<double>(7, derive_seed(71, trial));
    const MatrixXd sigma = model.materialize();
    const double dense_gap =
        pair.a.dot(sigma * pair.a) - pair.b.dot(sigma * pair.b);
    REQUIRE(population_bit(pair, model) == (dense_gap > 0.0 ? +1 : -1));
    REQUIRE(energy_gap(pair, model) == Catch::Approx(dense_gap).margin(1e-9));
  }
}

TEST_CASE("population_bit is scale invariant") {
  const auto model = gen_random_lowrank<double>(10, 2, 81);
  auto scaled = model;
  scaled.eigvals *= 123.456;
  for (int trial = 0; trial < 30; ++trial) {
    const auto pair = make_sketch_pair<double>(10, derive_seed(82, trial));
    REQUIRE(population_bit(pair, model) == population_bit(pair, scaled));
  }
}

TEST_CASE("energy_gap on the identity model is the norm difference") {
  CovarianceModel<double> model;
  model.n = 4;
  model.r = 4;
  model.basis = MatrixXd::Identity(4, 4);
  model.eigvals = VectorXd::Ones(4);
  const auto pair = make_sketch_pair<double>(4, 91);
  REQUIRE(energy_gap(pair, model) ==
          Catch::Approx(pair.a.squaredNorm() - pair.b.squaredNorm()));
}

TEST_CASE("energy_gap second moment matches 2|Sigma|_F^2 plus mean-square") {
  // For real Gaussian a: Var(a^T S a) = 2|S|_F^2, so E[z^2] = 4|S|_F^2 with
  // independent a and b, z = a^T S a - b^T S b having mean 0.
  const auto model = gen_random_lowrank<double>(6, 2, 101);
  const double frob2 = model.eigvals.squaredNorm();
  const long trials = 200000;
  double sum = 0.0, sum_sq = 0.0;
  for (long t = 0; t < trials; ++t) {
    const double z = energy_gap(make_sketch_pair<double>(6, derive_seed(102, t)), model);
    sum += z;
    sum_sq += z * z;
  }
  const double mean = sum / trials;
  REQUIRE(std::abs(mean) < 0.05 * std::sqrt(frob2));
  REQUIRE(sum_sq / trials == Catch::Approx(4.0 * frob2).epsilon(0.10));
}

TEST_CASE("flip_channel basics") {
  const auto model = gen_random_lowrank<double>(5, 2, 111);
  const auto bits = make_population_bits(model, 200, 112);

  const auto same = flip_channel(bits, 0.0, 999);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    REQUIRE(same[i].y == bits[i].y);
    REQUIRE(same[i].sketch_seed == bits[i].sketch_seed);
    REQUIRE(same[i].sensor_id == bits[i].sensor_id);
  }
  REQUIRE_THROWS_AS(flip_channel(bits, 0.7, 1), std::invalid_argument);
}

TEST_CASE("flip_channel at 1/2 flips about half the bits") {
  const auto model = gen_random_lowrank<double>(5, 2, 121);
  const auto bits = make_population_bits(model, 100000, 122);
  const auto flipped = flip_channel(bits, 0.5, 123);
  long changed = 0;
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (flipped[i].y != bits[i].y) ++changed;
  const double fraction = static_cast<double>(changed) / static_cast<double>(bits.size());
  REQUIRE(fraction > 0.49);
  REQUIRE(fraction < 0.51);
}

TEST_CASE("bit agreement improves with more samples") {
  const auto model = gen_random_lowrank<double>(10, 2, 131);
  const double rate_hi = bit_agreement_rate(model, 100, 10000, 0.0, true, 132);
  REQUIRE(rate_hi >= 0.95);

  // median monotonicity over seeds
  int wins = 0;
  for (int s = 0; s < 20; ++s) {
    const auto trial_model = gen_random_lowrank<double>(10, 2, derive_seed(133, s));
    const double r1 = bit_agreement_rate(trial_model, 50, 1, 0.0, true, derive_seed(134, s));
    const double r100 = bit_agreement_rate(trial_model, 50, 100, 0.0, true, derive_seed(135, s));
    if (r100 >= r1) ++wins;
  }
  REQUIRE(wins >= 11);
}

TEST_CASE("bit agreement with independent streams also converges") {
  const auto model = gen_random_lowrank<double>(8, 2, 141);
  REQUIRE(bit_agreement_rate(model, 60, 2000, 0.0, false, 142) >= 0.9);
}

TEST_CASE("scaled identity covariance gives consistent bits at large T") {
  CovarianceModel<double> model;
  model.n = 6;
  model.r = 6;
  model.basis = MatrixXd::Identity(6, 6);
  model.eigvals = 3.0 * VectorXd::Ones(6);
  REQUIRE(bit_agreement_rate(model, 100, 20000, 0.0, true, 151) >= 0.95);
}

TEST_CASE("bitstream writes and reads back identically") {
  const auto model = gen_random_lowrank<double>(12, 3, 161);
  const auto bits = make_population_bits(model, 50, 162);
  std::stringstream ss;
  write_bitstream(ss, BitstreamHeader{12, Field::Real}, bits);
  const auto [header, back] = read_bitstream(ss);
  REQUIRE(header.n == 12);
  REQUIRE(header.field == Field::Real);
  REQUIRE(back.size() == bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    REQUIRE(back[i].y == bits[i].y);
    REQUIRE(back[i].sketch_seed == bits[i].sketch_seed);
    REQUIRE(back[i].sensor_id == bits[i].sensor_id);
    // seed round trip regenerates the exact sketch pair
    const auto p1 = make_sketch_pair<double>(12, bits[i].sketch_seed);
    const auto p2 = make_sketch_pair<double>(12, back[i].sketch_seed);
    REQUIRE((p1.a - p2.a).norm() == 0.0);
  }
}

TEST_CASE("bitstream rejects malformed input") {
  std::stringstream empty;
  REQUIRE_THROWS(read_bitstream(empty));

  std::stringstream bad_header("#wrong n=3 field=real\n");
  REQUIRE_THROWS(read_bitstream(bad_header));

  std::stringstream bad_bit("#onebit-v1 n=3 field=real\n0\t+2\t17\n");
  REQUIRE_THROWS(read_bitstream(bad_bit));
}

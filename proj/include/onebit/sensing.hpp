#ifndef ONEBIT_SENSING_HPP
#define ONEBIT_SENSING_HPP

#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "onebit/model.hpp"
#include "onebit/rng.hpp"
#include "onebit/spectral.hpp"

namespace onebit {

/// Sketch-pair vectors (a, b); regenerable bit-identically from the seed.
template <class Scalar>
struct SketchPair {
  VectorX<Scalar> a;
  VectorX<Scalar> b;
  std::uint64_t seed = 0;
};

template <class Scalar>
SketchPair<Scalar> make_sketch_pair(int n, std::uint64_t seed) {
  Rng rng(seed);
  SketchPair<Scalar> pair;
  pair.a = rng.gaussian_vector<Scalar>(n);
  pair.b = rng.gaussian_vector<Scalar>(n);
  pair.seed = seed;
  return pair;
}

/// One signed comparison bit plus the seed of the sketch pair that produced it.
struct BitRecord {
  int y = -1;  // in {-1, +1}
  std::uint64_t sketch_seed = 0;
  std::int64_t sensor_id = 0;
};

/// Streaming energy averages of one sensor: running means of |<a,x>|^2 and
/// |<b,x>|^2 over the samples seen so far.
template <class Scalar>
class SensorState {
 public:
  SensorState(int n, std::uint64_t seed)
      : pair_(make_sketch_pair<Scalar>(n, seed)) {}

  void ingest(const VectorX<Scalar>& x) {
    if (x.size() != pair_.a.size()) throw std::invalid_argument("sample dimension mismatch");
    ++count_;
    const double ua = std::norm(Complex(pair_.a.dot(x)));
    const double ub = std::norm(Complex(pair_.b.dot(x)));
    acc_a_ += (ua - acc_a_) / static_cast<double>(count_);
    acc_b_ += (ub - acc_b_) / static_cast<double>(count_);
  }

  BitRecord emit_bit(std::int64_t sensor_id = 0) const {
    if (count_ == 0) throw std::logic_error("emit_bit before any sample");
    return BitRecord{acc_a_ > acc_b_ ? +1 : -1, pair_.seed, sensor_id};
  }

  const SketchPair<Scalar>& pair() const { return pair_; }
  double energy_a() const { return acc_a_; }
  double energy_b() const { return acc_b_; }
  long count() const { return count_; }

 private:
  SketchPair<Scalar> pair_;
  double acc_a_ = 0.0;
  double acc_b_ = 0.0;
  long count_ = 0;
};

/// Pre-sign energy gap a^H Sigma a - b^H Sigma b, evaluated in factored form.
template <class Scalar>
double energy_gap(const SketchPair<Scalar>& pair, const CovarianceModel<Scalar>& model) {
  if (pair.a.size() != model.n) throw std::invalid_argument("sketch dimension mismatch");
  const VectorXd sqrt_ev = model.eigvals.cwiseSqrt();
  const VectorX<Scalar> pa = model.basis.adjoint() * pair.a;
  const VectorX<Scalar> pb = model.basis.adjoint() * pair.b;
  double gap = 0.0;
  for (int k = 0; k < model.r; ++k)
    gap += model.eigvals(k) * (std::norm(Complex(pa(k))) - std::norm(Complex(pb(k))));
  return gap;
}

/// Exact population bit: sign of the energy gap on the true covariance, with
/// ties mapped to -1.
template <class Scalar>
int population_bit(const SketchPair<Scalar>& pair, const CovarianceModel<Scalar>& model) {
  return energy_gap(pair, model) > 0.0 ? +1 : -1;
}

/// m exact population bits with per-sensor sketch seeds derived from root_seed.
template <class Scalar>
std::vector<BitRecord> make_population_bits(const CovarianceModel<Scalar>& model, long m,
                                            std::uint64_t root_seed) {
  std::vector<BitRecord> bits;
  bits.reserve(static_cast<std::size_t>(m));
  for (long i = 0; i < m; ++i) {
    const std::uint64_t seed = derive_seed(root_seed, static_cast<std::uint64_t>(i));
    const SketchPair<Scalar> pair = make_sketch_pair<Scalar>(model.n, seed);
    bits.push_back(BitRecord{population_bit(pair, model), seed, i});
  }
  return bits;
}

/// Independently negate each bit with probability eps (binary symmetric channel).
inline std::vector<BitRecord> flip_channel(const std::vector<BitRecord>& bits, double eps,
                                           std::uint64_t seed) {
  if (eps < 0.0 || eps > 0.5) throw std::invalid_argument("flip probability outside [0, 1/2]");
  std::vector<BitRecord> out = bits;
  if (eps == 0.0) return out;
  Rng rng(seed);
  for (BitRecord& bit : out)
    if (rng.uniform() < eps) bit.y = -bit.y;
  return out;
}

/// Fraction of sensors whose sample-driven bit after T samples agrees with the
/// exact population bit for the same sketch pair. With shared_samples all
/// sensors observe one common stream; otherwise each gets its own.
template <class Scalar>
double bit_agreement_rate(const CovarianceModel<Scalar>& model, long m, long T, double noise_var,
                          bool shared_samples, std::uint64_t seed) {
  if (m < 1 || T < 1) throw std::invalid_argument("m and T must be positive");
  std::vector<SensorState<Scalar>> sensors;
  sensors.reserve(static_cast<std::size_t>(m));
  for (long i = 0; i < m; ++i)
    sensors.emplace_back(model.n, derive_seed(seed, 1, static_cast<std::uint64_t>(i)));

  if (shared_samples) {
    SampleStream<Scalar> stream(model, noise_var, derive_seed(seed, 2));
    for (long t = 0; t < T; ++t) {
      const VectorX<Scalar> x = stream.draw();
      for (auto& sensor : sensors) sensor.ingest(x);
    }
  } else {
    for (long i = 0; i < m; ++i) {
      SampleStream<Scalar> stream(model, noise_var,
                                  derive_seed(seed, 3, static_cast<std::uint64_t>(i)));
      for (long t = 0; t < T; ++t) sensors[static_cast<std::size_t>(i)].ingest(stream.draw());
    }
  }

  long agree = 0;
  for (long i = 0; i < m; ++i) {
    const auto& sensor = sensors[static_cast<std::size_t>(i)];
    if (sensor.emit_bit(i).y == population_bit(sensor.pair(), model)) ++agree;
  }
  return static_cast<double>(agree) / static_cast<double>(m);
}

// --- Bitstream wire format -------------------------------------------------
//
// Line-oriented text: a header line
//   #onebit-v1 n=<n> field=<real|complex>
// followed by one record per line: sensor_id<TAB>y<TAB>sketch_seed
// with y printed as +1/-1 and seeds as unsigned decimals.

struct BitstreamHeader {
  int n = 0;
  Field field = Field::Real;
};

inline void write_bitstream(std::ostream& os, const BitstreamHeader& header,
                            const std::vector<BitRecord>& bits) {
  os << "#onebit-v1 n=" << header.n << " field=" << field_name(header.field) << "\n";
  for (const BitRecord& bit : bits)
    os << bit.sensor_id << '\t' << (bit.y > 0 ? "+1" : "-1") << '\t' << bit.sketch_seed << '\n';
}

inline std::pair<BitstreamHeader, std::vector<BitRecord>> read_bitstream(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty bitstream");
  BitstreamHeader header;
  {
    std::istringstream hs(line);
    std::string magic, nfield, ffield;
    hs >> magic >> nfield >> ffield;
    if (magic != "#onebit-v1" || nfield.rfind("n=", 0) != 0 || ffield.rfind("field=", 0) != 0)
      throw std::runtime_error("bad bitstream header: " + line);
    header.n = std::stoi(nfield.substr(2));
    const std::string field = ffield.substr(6);
    if (field == "real")
      header.field = Field::Real;
    else if (field == "complex")
      header.field = Field::Complex;
    else
      throw std::runtime_error("bad bitstream field: " + field);
  }
  std::vector<BitRecord> bits;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    BitRecord bit;
    std::string ystr;
    if (!(ls >> bit.sensor_id >> ystr >> bit.sketch_seed))
      throw std::runtime_error("bad bitstream record: " + line);
    if (ystr == "+1")
      bit.y = +1;
    else if (ystr == "-1")
      bit.y = -1;
    else
      throw std::runtime_error("bad bit value: " + ystr);
    bits.push_back(bit);
  }
  return {header, bits};
}

}  // namespace onebit

#endif  // ONEBIT_SENSING_HPP

#ifndef ONEBIT_HARNESS_HPP
#define ONEBIT_HARNESS_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "onebit/bounds.hpp"
#include "onebit/fusion.hpp"
#include "onebit/model.hpp"
#include "onebit/sensing.hpp"
#include "onebit/spectrum.hpp"
#include "onebit/tracker.hpp"

namespace onebit {

/// Projector-based subspace error |(I - U_hat U_hat^H) X|_F^2 / |X|_F^2 with
/// X the truth factor U diag(sqrt(lambda)). Invariant to rotations of either
/// basis, which realizes the orthogonal alignment of the error bound without
/// computing it.
template <class Scalar>
double nmse(const SubspaceEstimate<Scalar>& est, const CovarianceModel<Scalar>& truth) {
  if (est.basis.rows() != truth.n) throw std::invalid_argument("dimension mismatch");
  const MatrixX<Scalar> X = truth.factor();
  const double total = X.squaredNorm();
  const double captured = (est.basis.adjoint() * X).squaredNorm();
  return std::clamp(1.0 - captured / total, 0.0, 1.0);
}

struct Quartiles {
  double q25 = 0.0, median = 0.0, q75 = 0.0;
};

inline Quartiles quartiles(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("empty sample");
  std::sort(v.begin(), v.end());
  auto at = [&](double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
  };
  return {at(0.25), at(0.5), at(0.75)};
}

inline std::string fmt9(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}

/// Configuration for every experiment runner; JSON field names match.
struct ExperimentConfig {
  std::string experiment;
  int n = 40;
  int r = 3;
  int r_est = 5;
  std::vector<long> m_grid;
  std::vector<long> T_grid;
  std::vector<double> eps_grid;
  std::vector<int> r_grid;
  double noise_var = 0.0;
  Field field = Field::Real;
  int trials = 10;
  std::uint64_t root_seed = 1;
  std::string output_path;
  long stride = 50;
  bool shared_samples = true;
  std::vector<double> freqs;
  std::vector<double> powers;
  std::vector<double> eigvals;  // bounds_fig1 / pinned spectra
  long bounds_trials = 100000;
  int bounds_r_max = 10;
  long m_max = 20000;
};

inline void validate(const ExperimentConfig& cfg) {
  if (cfg.n < 1 || cfg.r < 1 || cfg.r > cfg.n) throw std::invalid_argument("bad n/r");
  if (cfg.trials < 1) throw std::invalid_argument("trials must be positive");
  for (double e : cfg.eps_grid)
    if (e < 0.0 || e > 0.5) throw std::invalid_argument("flip probability outside [0, 1/2]");
  for (long m : cfg.m_grid)
    if (m < 1) throw std::invalid_argument("m must be positive");
  for (long T : cfg.T_grid)
    if (T < 1) throw std::invalid_argument("T must be positive");
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  auto get = [&](const char* key, auto& out) {
    if (j.contains(key)) out = j.at(key).get<std::decay_t<decltype(out)>>();
  };
  get("experiment", cfg.experiment);
  get("n", cfg.n);
  get("r", cfg.r);
  get("r_est", cfg.r_est);
  get("m_grid", cfg.m_grid);
  get("T_grid", cfg.T_grid);
  get("eps_grid", cfg.eps_grid);
  get("r_grid", cfg.r_grid);
  get("noise_var", cfg.noise_var);
  if (j.contains("field")) {
    const std::string f = j.at("field").get<std::string>();
    if (f == "real")
      cfg.field = Field::Real;
    else if (f == "complex")
      cfg.field = Field::Complex;
    else
      throw std::invalid_argument("bad field: " + f);
  }
  get("trials", cfg.trials);
  get("root_seed", cfg.root_seed);
  get("output_path", cfg.output_path);
  get("stride", cfg.stride);
  get("shared_samples", cfg.shared_samples);
  get("freqs", cfg.freqs);
  get("powers", cfg.powers);
  get("eigvals", cfg.eigvals);
  get("bounds_trials", cfg.bounds_trials);
  get("bounds_r_max", cfg.bounds_r_max);
  get("m_max", cfg.m_max);
  validate(cfg);
  return cfg;
}

// --- NMSE-vs-m sweeps (exact population bits) ------------------------------

struct NmseRow {
  long m = 0;
  int r = 0;
  double eps = 0.0;
  std::uint64_t cell_seed = 0;
  Quartiles stat;
};

namespace detail {

inline double nmse_trial(int n, int r, long m, double eps, std::uint64_t trial_seed) {
  const auto model = gen_random_lowrank<double>(n, r, derive_seed(trial_seed, 0));
  auto bits = make_population_bits(model, m, derive_seed(trial_seed, 1));
  if (eps > 0.0) bits = flip_channel(bits, eps, derive_seed(trial_seed, 2));
  const auto est = estimate_subspace(build_surrogate<double>(bits, n), r);
  return nmse(est, model);
}

}  // namespace detail

inline std::vector<NmseRow> run_nmse_vs_m(const ExperimentConfig& cfg) {
  validate(cfg);
  std::vector<int> ranks = cfg.r_grid.empty() ? std::vector<int>{cfg.r} : cfg.r_grid;
  std::vector<NmseRow> rows;
  std::uint64_t cell = 0;
  for (int r : ranks)
    for (long m : cfg.m_grid) {
      NmseRow row;
      row.m = m;
      row.r = r;
      row.cell_seed = derive_seed(cfg.root_seed, 100, cell++);
      std::vector<double> samples;
      for (int t = 0; t < cfg.trials; ++t)
        samples.push_back(detail::nmse_trial(cfg.n, r, m, 0.0,
                                             derive_seed(row.cell_seed, t)));
      row.stat = quartiles(samples);
      rows.push_back(row);
    }
  return rows;
}

inline std::vector<NmseRow> run_flip_sweep(const ExperimentConfig& cfg) {
  validate(cfg);
  std::vector<double> eps_grid = cfg.eps_grid.empty() ? std::vector<double>{0.0} : cfg.eps_grid;
  std::vector<NmseRow> rows;
  std::uint64_t cell = 0;
  for (long m : cfg.m_grid) {
    for (double eps : eps_grid) {
      NmseRow row;
      row.m = m;
      row.r = cfg.r;
      row.eps = eps;
      // cell seed depends on m only, so the eps = 0 row replays run_nmse_vs_m
      // trial-for-trial when grids line up
      row.cell_seed = derive_seed(cfg.root_seed, 100, cell);
      std::vector<double> samples;
      for (int t = 0; t < cfg.trials; ++t)
        samples.push_back(detail::nmse_trial(cfg.n, cfg.r, m, eps,
                                             derive_seed(row.cell_seed, t)));
      row.stat = quartiles(samples);
      rows.push_back(row);
    }
    ++cell;
  }
  return rows;
}

inline void write_nmse_csv(std::ostream& os, const ExperimentConfig& cfg,
                           const std::vector<NmseRow>& rows, bool with_eps) {
  os << "m,r" << (with_eps ? ",eps" : "")
     << ",n,trials,root_seed,cell_seed,nmse_q25,nmse_median,nmse_q75\n";
  for (const auto& row : rows) {
    os << row.m << ',' << row.r;
    if (with_eps) os << ',' << fmt9(row.eps);
    os << ',' << cfg.n << ',' << cfg.trials << ',' << cfg.root_seed << ',' << row.cell_seed << ','
       << fmt9(row.stat.q25) << ',' << fmt9(row.stat.median) << ',' << fmt9(row.stat.q75) << '\n';
  }
}

// --- Finite-sample sweep (sensors average T shared samples) ----------------

struct SampleSweepRow {
  long m = 0;
  long T = 0;
  double noise_var = 0.0;
  std::uint64_t cell_seed = 0;
  Quartiles stat;
  double agreement_median = 0.0;
};

namespace detail {

struct SampledBits {
  std::vector<BitRecord> bits;
  double agreement = 0.0;
};

// Shared-stream fast path: all sensors see one n x T sample block.
inline SampledBits sample_bits_shared(const CovarianceModel<double>& model, long m, long T,
                                      double noise_var, std::uint64_t seed) {
  SampleStream<double> stream(model, noise_var, derive_seed(seed, 0));
  MatrixXd X(model.n, T);
  for (long t = 0; t < T; ++t) X.col(t) = stream.draw();

  SampledBits out;
  out.bits.reserve(static_cast<std::size_t>(m));
  long agree = 0;
  for (long i = 0; i < m; ++i) {
    const std::uint64_t pair_seed = derive_seed(seed, 1, static_cast<std::uint64_t>(i));
    const auto pair = make_sketch_pair<double>(model.n, pair_seed);
    const double ua = (pair.a.transpose() * X).squaredNorm() / static_cast<double>(T);
    const double ub = (pair.b.transpose() * X).squaredNorm() / static_cast<double>(T);
    const int y = ua > ub ? +1 : -1;
    out.bits.push_back(BitRecord{y, pair_seed, i});
    if (y == population_bit(pair, model)) ++agree;
  }
  out.agreement = static_cast<double>(agree) / static_cast<double>(m);
  return out;
}

}  // namespace detail

inline std::vector<SampleSweepRow> run_sample_sweep(const ExperimentConfig& cfg) {
  validate(cfg);
  std::vector<SampleSweepRow> rows;
  std::uint64_t cell = 0;
  const VectorXd unit_eigvals = VectorXd::Ones(cfg.r);
  for (long m : cfg.m_grid)
    for (long T : cfg.T_grid) {
      SampleSweepRow row;
      row.m = m;
      row.T = T;
      row.noise_var = cfg.noise_var;
      row.cell_seed = derive_seed(cfg.root_seed, 200, cell++);
      std::vector<double> nmses, agreements;
      for (int t = 0; t < cfg.trials; ++t) {
        const std::uint64_t ts = derive_seed(row.cell_seed, t);
        const auto model = gen_orthonormal_model<double>(cfg.n, cfg.r, unit_eigvals,
                                                         derive_seed(ts, 0));
        const auto sampled =
            detail::sample_bits_shared(model, m, T, cfg.noise_var, derive_seed(ts, 1));
        const auto est = estimate_subspace(build_surrogate<double>(sampled.bits, cfg.n), cfg.r);
        nmses.push_back(nmse(est, model));
        agreements.push_back(sampled.agreement);
      }
      row.stat = quartiles(nmses);
      row.agreement_median = quartiles(agreements).median;
      rows.push_back(row);
    }
  return rows;
}

inline void write_sample_sweep_csv(std::ostream& os, const ExperimentConfig& cfg,
                                   const std::vector<SampleSweepRow>& rows) {
  os << "m,T,noise_var,n,r,trials,root_seed,cell_seed,"
        "nmse_q25,nmse_median,nmse_q75,agreement_median\n";
  for (const auto& row : rows)
    os << row.m << ',' << row.T << ',' << fmt9(row.noise_var) << ',' << cfg.n << ',' << cfg.r
       << ',' << cfg.trials << ',' << cfg.root_seed << ',' << row.cell_seed << ','
       << fmt9(row.stat.q25) << ',' << fmt9(row.stat.median) << ',' << fmt9(row.stat.q75) << ','
       << fmt9(row.agreement_median) << '\n';
}

// --- Online tracker vs batch ----------------------------------------------

struct OnlineRow {
  long bit_index = 0;
  Quartiles online;
  bool has_batch = false;
  Quartiles batch;
};

inline std::vector<OnlineRow> run_online(const ExperimentConfig& cfg) {
  validate(cfg);
  const long m = cfg.m_grid.empty() ? 5000 : cfg.m_grid.back();
  const int r_est = std::max(cfg.r_est, cfg.r);
  std::vector<long> snapshots;
  for (long i = cfg.stride; i < m; i += cfg.stride) snapshots.push_back(i);
  snapshots.push_back(m);

  std::vector<std::vector<double>> online(snapshots.size());
  std::vector<double> batch;
  for (int t = 0; t < cfg.trials; ++t) {
    const std::uint64_t ts = derive_seed(cfg.root_seed, 300, t);
    const auto model = gen_random_lowrank<double>(cfg.n, cfg.r, derive_seed(ts, 0));
    const auto bits = make_population_bits(model, m, derive_seed(ts, 1));
    SubspaceTracker<double> tracker(cfg.n, r_est);
    std::size_t snap = 0;
    for (long i = 0; i < m; ++i) {
      tracker.update(bits[static_cast<std::size_t>(i)]);
      if (snap < snapshots.size() && i + 1 == snapshots[snap]) {
        const int r = std::min<int>(cfg.r, static_cast<int>(tracker.columns()));
        online[snap].push_back(r >= 1 ? nmse(tracker.subspace(r), model) : 1.0);
        ++snap;
      }
    }
    batch.push_back(nmse(estimate_subspace(build_surrogate<double>(bits, cfg.n), cfg.r), model));
  }

  std::vector<OnlineRow> rows;
  for (std::size_t s = 0; s < snapshots.size(); ++s) {
    OnlineRow row;
    row.bit_index = snapshots[s];
    row.online = quartiles(online[s]);
    if (s + 1 == snapshots.size()) {
      row.has_batch = true;
      row.batch = quartiles(batch);
    }
    rows.push_back(row);
  }
  return rows;
}

inline void write_online_csv(std::ostream& os, const ExperimentConfig& cfg,
                             const std::vector<OnlineRow>& rows) {
  os << "bit_index,n,r,r_est,trials,root_seed,"
        "online_q25,online_median,online_q75,batch_q25,batch_median,batch_q75\n";
  for (const auto& row : rows) {
    os << row.bit_index << ',' << cfg.n << ',' << cfg.r << ',' << std::max(cfg.r_est, cfg.r) << ','
       << cfg.trials << ',' << cfg.root_seed << ',' << fmt9(row.online.q25) << ','
       << fmt9(row.online.median) << ',' << fmt9(row.online.q75) << ',';
    if (row.has_batch)
      os << fmt9(row.batch.q25) << ',' << fmt9(row.batch.median) << ',' << fmt9(row.batch.q75);
    else
      os << ",,";
    os << '\n';
  }
}

// --- Truncated EVD vs convex program on identical bits ---------------------

struct ConvexCompareRow {
  long m = 0;
  std::uint64_t cell_seed = 0;
  Quartiles evd;
  Quartiles convex;
};

inline std::vector<ConvexCompareRow> run_convex_compare(const ExperimentConfig& cfg) {
  validate(cfg);
  std::vector<ConvexCompareRow> rows;
  std::uint64_t cell = 0;
  for (long m : cfg.m_grid) {
    ConvexCompareRow row;
    row.m = m;
    row.cell_seed = derive_seed(cfg.root_seed, 400, cell++);
    std::vector<double> evd, cvx;
    for (int t = 0; t < cfg.trials; ++t) {
      const std::uint64_t ts = derive_seed(row.cell_seed, t);
      const auto model = gen_random_lowrank<double>(cfg.n, cfg.r, derive_seed(ts, 0));
      const auto bits = make_population_bits(model, m, derive_seed(ts, 1));
      evd.push_back(nmse(estimate_subspace(build_surrogate<double>(bits, cfg.n), cfg.r), model));
      cvx.push_back(nmse(convex_estimate<double>(bits, cfg.n, cfg.r).second, model));
    }
    row.evd = quartiles(evd);
    row.convex = quartiles(cvx);
    rows.push_back(row);
  }
  return rows;
}

inline void write_convex_compare_csv(std::ostream& os, const ExperimentConfig& cfg,
                                     const std::vector<ConvexCompareRow>& rows) {
  os << "m,n,r,trials,root_seed,cell_seed,evd_q25,evd_median,evd_q75,"
        "convex_q25,convex_median,convex_q75\n";
  for (const auto& row : rows)
    os << row.m << ',' << cfg.n << ',' << cfg.r << ',' << cfg.trials << ',' << cfg.root_seed << ','
       << row.cell_seed << ',' << fmt9(row.evd.q25) << ',' << fmt9(row.evd.median) << ','
       << fmt9(row.evd.q75) << ',' << fmt9(row.convex.q25) << ',' << fmt9(row.convex.median)
       << ',' << fmt9(row.convex.q75) << '\n';
}

// --- Lower-bound figure reproduction ---------------------------------------

inline std::vector<BoundReport> run_bounds_fig1(const ExperimentConfig& cfg) {
  std::vector<BoundReport> rows;
  for (int r = 1; r <= cfg.bounds_r_max; ++r) {
    const VectorXd eigvals = VectorXd::Ones(r);
    const std::uint64_t seed = derive_seed(cfg.root_seed, 500, static_cast<std::uint64_t>(r));
    rows.push_back(cfg.field == Field::Complex
                       ? expected_diag_mc<Complex>(eigvals, 1, cfg.bounds_trials, seed)
                       : expected_diag_mc<double>(eigvals, 1, cfg.bounds_trials, seed));
  }
  return rows;
}

inline void write_bounds_csv(std::ostream& os, const ExperimentConfig& cfg,
                             const std::vector<BoundReport>& rows) {
  os << "r,kappa,bound_exp,bound_poly,alpha,mc_value,mc_stderr,trials,field\n";
  for (const auto& row : rows)
    os << row.r << ',' << fmt9(row.kappa) << ',' << fmt9(row.bound_exp) << ','
       << fmt9(row.bound_poly) << ',' << fmt9(row.alpha) << ',' << fmt9(row.mc_value) << ','
       << fmt9(row.mc_stderr) << ',' << row.trials << ',' << field_name(cfg.field) << '\n';
}

// --- Online line-spectrum run ----------------------------------------------

inline std::vector<TrackPoint> run_spectrum(const ExperimentConfig& cfg) {
  if (cfg.freqs.empty() || cfg.freqs.size() != cfg.powers.size())
    throw std::invalid_argument("spectrum run needs matching freqs/powers");
  const auto model = gen_toeplitz_vandermonde(cfg.n, cfg.freqs, cfg.powers);
  return spectrum_track_run(model, cfg.m_max, cfg.r_est, cfg.stride,
                            derive_seed(cfg.root_seed, 600));
}

inline void write_spectrum_csv(std::ostream& os, const ExperimentConfig& cfg,
                               const std::vector<TrackPoint>& rows) {
  os << "bit_index";
  for (int k = 1; k <= cfg.r_est; ++k) os << ",f_" << k;
  for (int k = 1; k <= cfg.r_est; ++k) os << ",amp_" << k;
  os << '\n';
  for (const auto& pt : rows) {
    os << pt.bit_index;
    for (int k = 0; k < cfg.r_est; ++k)
      os << ','
         << (k < pt.estimate.r_used ? fmt9(pt.estimate.freqs[static_cast<std::size_t>(k)]) : "");
    for (int k = 0; k < cfg.r_est; ++k)
      os << ',' << (k < pt.estimate.r_used
                        ? fmt9(pt.estimate.amplitudes[static_cast<std::size_t>(k)])
                        : "");
    os << '\n';
  }
}

}  // namespace onebit

#endif  // ONEBIT_HARNESS_HPP

// Experiment CLI: Monte Carlo sweeps, bitstream generation, and batch
// estimation from bitstream files. CSV schemas are the output contract;
// plotting is left to external tools.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "onebit/onebit.hpp"

namespace {

using namespace onebit;

ExperimentConfig load_config(const std::string& path, int trials_override,
                             std::uint64_t seed_override, bool has_seed,
                             const std::string& out_override) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  nlohmann::json j;
  in >> j;
  ExperimentConfig cfg = config_from_json(j);
  if (trials_override > 0) cfg.trials = trials_override;
  if (has_seed) cfg.root_seed = seed_override;
  if (!out_override.empty()) cfg.output_path = out_override;
  return cfg;
}

int run_experiment(const ExperimentConfig& cfg) {
  std::ostringstream csv;
  if (cfg.experiment == "nmse_vs_m") {
    write_nmse_csv(csv, cfg, run_nmse_vs_m(cfg), /*with_eps=*/false);
  } else if (cfg.experiment == "flip_sweep") {
    write_nmse_csv(csv, cfg, run_flip_sweep(cfg), /*with_eps=*/true);
  } else if (cfg.experiment == "sample_sweep") {
    write_sample_sweep_csv(csv, cfg, run_sample_sweep(cfg));
  } else if (cfg.experiment == "online_run") {
    write_online_csv(csv, cfg, run_online(cfg));
  } else if (cfg.experiment == "convex_compare") {
    write_convex_compare_csv(csv, cfg, run_convex_compare(cfg));
  } else if (cfg.experiment == "bounds_fig1") {
    write_bounds_csv(csv, cfg, run_bounds_fig1(cfg));
  } else if (cfg.experiment == "spectrum_run") {
    write_spectrum_csv(csv, cfg, run_spectrum(cfg));
  } else {
    std::cerr << "unknown experiment: " << cfg.experiment << "\n";
    return 2;
  }
  if (cfg.output_path.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream out(cfg.output_path);
    if (!out) throw std::runtime_error("cannot open output: " + cfg.output_path);
    out << csv.str();
    std::cerr << "wrote " << cfg.output_path << "\n";
  }
  return 0;
}

int gen_bits(int n, int r, long m, Field field, std::uint64_t seed, const std::string& out_path) {
  std::vector<BitRecord> bits;
  if (field == Field::Real) {
    const auto model = gen_random_lowrank<double>(n, r, derive_seed(seed, 0));
    bits = make_population_bits(model, m, derive_seed(seed, 1));
  } else {
    const auto model = gen_random_lowrank<Complex>(n, r, derive_seed(seed, 0));
    bits = make_population_bits(model, m, derive_seed(seed, 1));
  }
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot open output: " + out_path);
  write_bitstream(out, BitstreamHeader{n, field}, bits);
  std::cerr << "wrote " << m << " bits to " << out_path << "\n";
  return 0;
}

int estimate(const std::string& bits_path, int rank) {
  std::ifstream in(bits_path);
  if (!in) throw std::runtime_error("cannot open bitstream: " + bits_path);
  const auto [header, bits] = read_bitstream(in);
  nlohmann::json j;
  if (header.field == Field::Real) {
    const auto est = estimate_subspace(build_surrogate<double>(bits, header.n), rank);
    j = subspace_to_json(est);
  } else {
    const auto est = estimate_subspace(build_surrogate<Complex>(bits, header.n), rank);
    j = subspace_to_json(est);
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"One-bit energy-comparison subspace recovery experiments"};
  app.require_subcommand(1);

  std::string config_path, out_path, bits_path;
  int trials = 0;
  std::uint64_t seed = 0;
  bool has_seed = false;

  const std::vector<std::string> experiments = {"nmse_vs_m",  "flip_sweep",     "sample_sweep",
                                                "online_run", "convex_compare", "bounds_fig1",
                                                "spectrum_run"};
  for (const auto& name : experiments) {
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--trials", trials, "override trial count");
    sub->add_option("--seed", seed, "override root seed")->each([&](const std::string&) {
      has_seed = true;
    });
    sub->add_option("--out", out_path, "output CSV path (default stdout)");
  }

  auto* gen = app.add_subcommand("gen-bits", "generate a population bitstream file");
  int gen_n = 40, gen_r = 3;
  long gen_m = 1000;
  std::string gen_field = "real";
  std::uint64_t gen_seed = 1;
  std::string gen_out = "bits.txt";
  gen->add_option("--n", gen_n, "dimension");
  gen->add_option("--rank", gen_r, "covariance rank");
  gen->add_option("--m", gen_m, "number of bits");
  gen->add_option("--field", gen_field, "real|complex")
      ->check(CLI::IsMember({"real", "complex"}));
  gen->add_option("--seed", gen_seed, "root seed");
  gen->add_option("--out", gen_out, "output path")->required();

  auto* est = app.add_subcommand("estimate", "batch subspace estimate from a bitstream file");
  int est_rank = 3;
  est->add_option("--bits", bits_path, "bitstream file")->required();
  est->add_option("--rank", est_rank, "subspace rank")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed())
      return gen_bits(gen_n, gen_r, gen_m, gen_field == "real" ? Field::Real : Field::Complex,
                      gen_seed, gen_out);
    if (est->parsed()) return estimate(bits_path, est_rank);
    for (const auto& name : experiments)
      if (app.get_subcommand(name)->parsed()) {
        ExperimentConfig cfg = load_config(config_path, trials, seed, has_seed, out_path);
        if (cfg.experiment.empty()) cfg.experiment = name;
        if (cfg.experiment != name)
          throw std::runtime_error("config experiment '" + cfg.experiment +
                                   "' does not match subcommand '" + name + "'");
        return run_experiment(cfg);
      }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

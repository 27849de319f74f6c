#pragma once

// Command-line front end: simulate, detect, experiment, selftest.
// Exit codes: 0 success, 1 runtime failure, 2 usage, 3 input format.

#include "peakfdr/error.hpp"
#include "peakfdr/experiment.hpp"
#include "peakfdr/io.hpp"
#include "peakfdr/oracles.hpp"
#include "peakfdr/pipeline.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace peakfdr::cli {

enum exit_code : int { ok = 0, runtime_failure = 1, usage = 2, input_format = 3 };

class usage_error : public error
{
public:
  using error::error;
};

inline std::uint64_t default_seed()
{
  if (const char* env = std::getenv("PEAKFDR_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw usage_error(std::string("PEAKFDR_SEED is not an unsigned integer: ") + env);
    }
  }
  return 0;
}

// ---- experiment grids -----------------------------------------------------

// Keys in expansion order; the last key varies fastest.
inline const std::vector<std::string>& grid_keys()
{
  static const std::vector<std::string> keys{
      "L",     "n_signals", "a", "b",      "c",        "sigma",     "nu",
      "gamma", "alpha",     "d", "policy", "n_trials", "base_seed", "moments_bandwidth",
      "min_gap"};
  return keys;
}

inline void apply_grid_value(TrialConfig& c, const std::string& key, const json& v)
{
  const auto num = [&] {
    if (v.is_number())
      return v.get<double>();
    if (v.is_string()) {
      try {
        return detail::parse_double(v.get<std::string>());
      } catch (const format_error&) {
        throw usage_error("grid key '" + key + "' needs a number, got '" + v.get<std::string>() + "'");
      }
    }
    throw usage_error("grid key '" + key + "' needs a number");
  };
  const auto str = [&] {
    if (!v.is_string())
      throw usage_error("grid key '" + key + "' needs a string");
    return v.get<std::string>();
  };
  const auto count = [&](const char* what) {
    const double x = num();
    if (x < 0 || x != std::floor(x))
      throw usage_error(std::string("grid key '") + what + "' needs a non-negative integer");
    return static_cast<std::uint64_t>(x);
  };
  if (key == "L")
    c.length = count("L");
  else if (key == "n_signals")
    c.n_signals = count("n_signals");
  else if (key == "a")
    c.a = num();
  else if (key == "b")
    c.b = num();
  else if (key == "c")
    c.c = num();
  else if (key == "sigma")
    c.sigma = num();
  else if (key == "nu")
    c.nu = num();
  else if (key == "gamma")
    c.gamma = num();
  else if (key == "alpha")
    c.alpha = num();
  else if (key == "d")
    c.d = static_cast<int>(count("d"));
  else if (key == "policy")
    c.policy = parse_side_policy(str());
  else if (key == "n_trials")
    c.n_trials = count("n_trials");
  else if (key == "base_seed")
    c.base_seed = count("base_seed");
  else if (key == "moments_bandwidth")
    c.bandwidth = parse_moments_bandwidth(str());
  else if (key == "min_gap")
    c.min_gap = num();
  else
    throw usage_error("unknown grid key '" + key + "'");
}

/// Expands one grid object (scalars or arrays per key) into configs, on top
/// of `base`. Overrides replace the object's values key by key.
inline std::vector<TrialConfig> expand_grid(const json& grid, const TrialConfig& base,
                                            const std::map<std::string, json>& overrides = {})
{
  if (!grid.is_object())
    throw usage_error("grid must be an object");
  for (const auto& [key, _] : grid.items())
    if (std::find(grid_keys().begin(), grid_keys().end(), key) == grid_keys().end())
      throw usage_error("unknown grid key '" + key + "'");
  std::vector<TrialConfig> configs{base};
  for (const auto& key : grid_keys()) {
    json values;
    if (auto it = overrides.find(key); it != overrides.end())
      values = it->second;
    else if (grid.contains(key))
      values = grid[key];
    else
      continue;
    if (!values.is_array())
      values = json::array({values});
    if (values.empty())
      throw usage_error("grid key '" + key + "' has no values");
    std::vector<TrialConfig> next;
    for (const auto& c : configs)
      for (const auto& v : values) {
        auto copy = c;
        apply_grid_value(copy, key, v);
        next.push_back(copy);
      }
    configs = std::move(next);
  }
  for (const auto& c : configs) {
    try {
      c.validate();
    } catch (const invalid_argument& e) {
      throw usage_error(e.what());
    }
  }
  return configs;
}

/// A config document is either one grid object or
/// {"defaults": {...}, "grids": [{...}, ...]}; each grid is expanded over
/// the defaults and the results concatenated.
inline std::vector<TrialConfig> expand_config_document(const json& doc,
                                                       const std::map<std::string, json>& overrides,
                                                       TrialConfig base = {})
{
  if (!doc.is_object())
    throw usage_error("config document must be a JSON object");
  if (!doc.contains("grids"))
    return expand_grid(doc, base, overrides);
  if (doc.contains("defaults")) {
    const auto& defaults = doc["defaults"];
    for (const auto& [key, v] : defaults.items()) {
      if (v.is_array())
        throw usage_error("defaults must be scalars; put sweeps in grids");
      apply_grid_value(base, key, v);
    }
  }
  for (const auto& [key, _] : doc.items())
    if (key != "defaults" && key != "grids")
      throw usage_error("unknown top-level key '" + key + "'");
  std::vector<TrialConfig> out;
  for (const auto& grid : doc["grids"]) {
    auto part = expand_grid(grid, base, overrides);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

// "key=v1,v2" -> key and its JSON values; numbers stay strings and are parsed later.
inline std::pair<std::string, json> parse_override(const std::string& text)
{
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0)
    throw usage_error("--set expects key=value[,value...], got '" + text + "'");
  const std::string key = text.substr(0, eq);
  if (std::find(grid_keys().begin(), grid_keys().end(), key) == grid_keys().end())
    throw usage_error("unknown --set key '" + key + "'");
  json values = json::array();
  for (const auto& v : detail::split(text.substr(eq + 1), ','))
    values.push_back(v);
  return {key, values};
}

// ---- selftest -------------------------------------------------------------

struct OracleReport
{
  std::string name;
  bool passed = false;
  std::string detail;
};

inline OracleReport oracle_moments()
{
  double worst = 0.0;
  for (double xi : {1.0, 3.0, 5.0, std::sqrt(18.0)}) {
    const auto m = noise_moments(1.0, xi);
    const double closed[3] = {m.sigma_gamma_sq, m.lambda2, m.lambda4};
    for (int k = 0; k < 3; ++k) {
      const double q = oracle::squared_derivative_integral(1.0, xi, k);
      worst = std::max(worst, std::abs(q - closed[k]) / closed[k]);
    }
  }
  return {"moments", worst <= 1e-8, "max relative error " + format_double(worst) + " (tol 1e-8)"};
}

inline OracleReport oracle_palm(bool quick, std::uint64_t seed)
{
  const std::size_t n = quick ? 20000 : 100000;
  const double tol = quick ? 0.04 : 0.02;
  double worst = 0.0;
  for (auto [nu, gamma] : {std::pair{5.0, 4.0}, std::pair{3.0, 2.0}}) {
    const auto sample = oracle::simulate_smoothed_maxima(1.0, nu, gamma, 1, n, seed);
    const auto moments = noise_moments(1.0, effective_bandwidth(nu, gamma));
    worst = std::max(worst, oracle::palm_ks_distance(sample.peaks, moments));
  }
  return {"palm", worst <= tol,
          "max KS distance " + format_double(worst) + " (tol " + format_double(tol) + ")"};
}

inline OracleReport oracle_bh(bool quick, std::uint64_t seed)
{
  const std::size_t instances = quick ? 1000 : 10000;
  auto engine = make_engine(seed, 77);
  std::uniform_int_distribution<int> size(1, 50);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::gamma_distribution<double> ga(0.3, 1.0), gb(4.0, 1.0);
  std::size_t mismatches = 0;
  for (std::size_t t = 0; t < instances; ++t) {
    const int m = size(engine);
    std::vector<double> p(static_cast<std::size_t>(m));
    for (auto& v : p) {
      if (t % 2 == 0) {
        v = unit(engine);
      } else {
        const double x = ga(engine), y = gb(engine); // Beta(0.3, 4)
        v = x / (x + y);
      }
    }
    const auto got = bh_reject(PValueSeries::from_values(p), 0.05).rejected;
    if (got != oracle::bh_brute_force(p, 0.05))
      ++mismatches;
  }
  return {"bh", mismatches == 0,
          std::to_string(mismatches) + " mismatches over " + std::to_string(instances) + " instances"};
}

inline OracleReport oracle_two_sample(bool quick, std::uint64_t seed)
{
  const std::size_t n = quick ? 20000 : 100000;
  const double k = quick ? 4.0 : 3.0;
  double worst = 0.0;
  struct Point { double nu, gamma; int d; double peak, neighbor; };
  const Point points[] = {{5, 4, 2, 1.0, 0.5}, {5, 4, 2, 0.5, 0.0}, {3, 2, 2, 1.0, 0.5},
                          {3, 2, 2, 0.5, 0.0}, {5, 4, 1, 0.5, 0.0}};
  for (const auto& pt : points) {
    const auto sample = oracle::simulate_smoothed_maxima(1.0, pt.nu, pt.gamma, pt.d, n, seed);
    const auto model =
        make_joint_null_model(noise_moments(1.0, effective_bandwidth(pt.nu, pt.gamma)), pt.d);
    const double p = two_sample_pvalue(pt.peak, pt.neighbor, model);
    const auto f = oracle::joint_exceedance(sample, pt.peak, pt.neighbor);
    const double se = std::sqrt(std::max(p * (1 - p), 1e-300) / static_cast<double>(f.events));
    worst = std::max(worst, std::abs(f.frequency - p) / se);
  }
  return {"two-sample", worst <= k,
          "max |freq - p| / stderr " + format_double(worst) + " (tol " + format_double(k) + ")"};
}

// ---- commands -------------------------------------------------------------

struct Streams
{
  std::ostream& out;
  std::ostream& err;
};

inline int cmd_simulate(const std::map<std::string, std::string>& raw, Streams io,
                        std::size_t L, std::size_t signals, double a, double b, double c,
                        double sigma, double nu, double dt, std::optional<double> min_gap,
                        std::uint64_t seed, const std::string& out_path,
                        const std::string& binary_path)
{
  SignalSpec signal;
  signal.amplitude = a;
  signal.width = b;
  signal.support_multiplier = c;
  const double hw = signal.support_half_width();
  signal.centers = place_occurrences(signals, L, dt, hw, min_gap.value_or(2 * hw), seed, 0);
  const auto parts = synthesize_parts(signal, NoiseSpec{sigma, nu}, L, dt, seed, 1);
  std::ostringstream csv;
  write_measurement_csv(csv, parts);
  write_file_atomic(out_path, csv.str());
  RunManifest manifest;
  manifest.command = "simulate";
  manifest.seed = seed;
  manifest.config = json{{"L", L},         {"signals", signals}, {"a", a},     {"b", b},
                         {"c", c},         {"sigma", sigma},     {"nu", nu},   {"dt", dt},
                         {"min_gap", min_gap.value_or(2 * hw)},  {"seed", seed},
                         {"centers", signal.centers}, {"argv", raw}};
  manifest.outputs.push_back(out_path);
  if (!binary_path.empty()) {
    std::ostringstream bin;
    write_measurement_binary(bin, parts.measurement);
    write_file_atomic(binary_path, bin.str());
    manifest.outputs.push_back(binary_path);
  }
  write_manifest(out_path, manifest);
  io.out << "wrote " << L << " samples to " << out_path << "\n";
  return ok;
}

/// Runs the CLI on `args` (without the program name).
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr)
{
  CLI::App app{"FDR-controlled peak detection in noisy 1-D measurements"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tool_version);

  // simulate
  auto* sim = app.add_subcommand("simulate", "synthesize a measurement CSV");
  std::size_t sim_L = 1000, sim_signals = 10;
  double sim_a = 5, sim_b = 3, sim_c = 3, sim_sigma = 1, sim_nu = 4, sim_dt = 1;
  std::optional<double> sim_gap;
  std::optional<std::uint64_t> sim_seed;
  std::string sim_out, sim_bin;
  sim->add_option("--L", sim_L, "number of samples")->check(CLI::Range(3, 1 << 30));
  sim->add_option("--signals", sim_signals, "number of signal occurrences");
  sim->add_option("--a", sim_a, "amplitude")->check(CLI::PositiveNumber);
  sim->add_option("--b", sim_b, "signal width (sd)")->check(CLI::PositiveNumber);
  sim->add_option("--c", sim_c, "support half-width multiplier")->check(CLI::PositiveNumber);
  sim->add_option("--sigma", sim_sigma, "noise scale")->check(CLI::NonNegativeNumber);
  sim->add_option("--nu", sim_nu, "noise bandwidth")->check(CLI::PositiveNumber);
  sim->add_option("--dt", sim_dt, "grid spacing")->check(CLI::PositiveNumber);
  sim->add_option("--min-gap", sim_gap, "gap between adjacent supports")->check(CLI::NonNegativeNumber);
  sim->add_option("--seed", sim_seed, "seed (default: $PEAKFDR_SEED or 0)");
  sim->add_option("--out", sim_out, "measurement CSV path")->required();
  sim->add_option("--binary", sim_bin, "also write the binary form here");

  // detect
  auto* det = app.add_subcommand("detect", "run a detection on a measurement file");
  std::string det_in, det_out, det_cands, det_method = "one-sample", det_policy = "right",
                                          det_bw = "composed";
  double det_gamma = 4, det_alpha = 0.05, det_sigma = 1, det_nu = 4;
  int det_d = 2, det_k = 2;
  std::size_t det_mc = 200000;
  bool det_floor = false;
  std::optional<std::uint64_t> det_seed;
  det->add_option("--input", det_in, "measurement CSV or .bin")->required();
  det->add_option("--out", det_out, "detection JSON path")->required();
  det->add_option("--candidates-csv", det_cands, "also write candidates as CSV");
  det->add_option("--method", det_method)->check(CLI::IsMember({"one-sample", "two-sample"}));
  det->add_option("--gamma", det_gamma, "smoothing bandwidth")->check(CLI::PositiveNumber);
  det->add_option("--alpha", det_alpha, "FDR level in (0, 1)")
      ->check(CLI::Validator(
          [](std::string& s) {
            try {
              const double v = std::stod(s);
              return v > 0 && v < 1 ? std::string{} : std::string{"alpha must lie in (0, 1)"};
            } catch (const std::exception&) {
              return std::string{"alpha must be a number"};
            }
          },
          "(0,1)"));
  det->add_option("--sigma", det_sigma, "known noise scale")->check(CLI::PositiveNumber);
  det->add_option("--nu", det_nu, "known noise bandwidth")->check(CLI::PositiveNumber);
  det->add_option("--d", det_d, "neighbour distance in samples")->check(CLI::PositiveNumber);
  det->add_option("--K", det_k, "samples per test (K > 2 uses Monte Carlo)")->check(CLI::Range(2, 64));
  det->add_option("--policy", det_policy)
      ->check(CLI::IsMember({"right", "left", "both-min", "both-max"}));
  det->add_option("--moments-bandwidth", det_bw)->check(CLI::IsMember({"composed", "raw"}));
  det->add_option("--mc-samples", det_mc, "null maxima for K > 2");
  det->add_option("--seed", det_seed, "seed for the K > 2 Monte-Carlo null");
  det->add_flag("--neighbor-floor", det_floor, "debug: neighbour thresholds at -inf");

  // experiment
  auto* exp = app.add_subcommand("experiment", "run a Monte-Carlo power/FDR grid");
  std::string exp_config, exp_out;
  std::vector<std::string> exp_sets;
  std::optional<std::size_t> exp_trials;
  std::optional<std::uint64_t> exp_seed;
  unsigned exp_parallel = 1;
  exp->add_option("--config", exp_config, "JSON grid config")->check(CLI::ExistingFile);
  exp->add_option("--set", exp_sets, "key=v1[,v2...] override (repeatable)");
  exp->add_option("--trials", exp_trials, "trials per grid point");
  exp->add_option("--seed", exp_seed, "base seed");
  exp->add_option("--parallel", exp_parallel, "worker threads")->check(CLI::Range(1u, 1024u));
  exp->add_option("--out", exp_out, "experiment CSV path")->required();

  // selftest
  auto* st = app.add_subcommand("selftest", "check statistical kernels against oracles");
  bool st_quick = false;
  std::vector<std::string> st_only;
  std::optional<std::uint64_t> st_seed;
  st->add_flag("--quick", st_quick, "fewer samples, looser tolerances");
  st->add_option("--oracle", st_only, "run only these oracles")
      ->check(CLI::IsMember({"moments", "palm", "bh", "two-sample"}));
  st->add_option("--seed", st_seed, "seed");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::CallForVersion&) {
    out << tool_version << "\n";
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return usage;
  }

  std::map<std::string, std::string> echo;
  for (std::size_t i = 0; i < args.size(); ++i)
    echo[std::to_string(i)] = args[i];

  try {
    if (*sim) {
      return cmd_simulate(echo, {out, err}, sim_L, sim_signals, sim_a, sim_b, sim_c, sim_sigma,
                          sim_nu, sim_dt, sim_gap, sim_seed.value_or(default_seed()), sim_out,
                          sim_bin);
    }
    if (*det) {
      Measurement m;
      try {
        m = read_measurement_file(det_in);
      } catch (const format_error& e) {
        err << "error: " << e.what() << "\n";
        return input_format;
      }
      DetectionParams p;
      p.kernel.bandwidth = det_gamma;
      p.noise = NoiseSpec{det_sigma, det_nu};
      p.alpha = det_alpha;
      p.bandwidth = parse_moments_bandwidth(det_bw);
      p.neighbors.samples = det_k;
      p.neighbors.distance = det_d;
      p.neighbors.policy = parse_side_policy(det_policy);
      p.neighbors.mc_samples = det_mc;
      p.neighbor_floor = det_floor;
      p.mc_seed = det_seed.value_or(default_seed());
      if (det_method == "one-sample" && (det_floor || det_k != 2))
        throw usage_error("--neighbor-floor and --K apply to --method two-sample only");
      const auto result = det_method == "one-sample" ? one_sample_test(m, p) : k_sample_test(m, p);
      auto doc = detection_to_json(result);
      write_file_atomic(det_out, doc.dump(2) + "\n");
      RunManifest manifest;
      manifest.command = "detect";
      manifest.seed = p.mc_seed;
      manifest.config = json{{"input", det_in}, {"params", detection_params_json(p)},
                             {"method", det_method}, {"argv", echo}};
      manifest.outputs.push_back(det_out);
      if (!det_cands.empty()) {
        std::ostringstream csv;
        write_candidates_csv(csv, result.candidates, result.dt, result.origin);
        write_file_atomic(det_cands, csv.str());
        manifest.outputs.push_back(det_cands);
      }
      write_manifest(det_out, manifest);
      out << det_method << ": " << result.candidates.size() << " candidates, "
          << result.detected.size() << " detected\n";
      return ok;
    }
    if (*exp) {
      json doc = json::object();
      if (!exp_config.empty()) {
        std::ifstream in(exp_config);
        try {
          doc = json::parse(in);
        } catch (const json::exception& e) {
          err << "error: cannot parse " << exp_config << ": " << e.what() << "\n";
          return input_format;
        }
      }
      std::map<std::string, json> overrides;
      for (const auto& s : exp_sets) {
        auto [key, values] = parse_override(s);
        overrides[key] = values;
      }
      if (exp_trials)
        overrides["n_trials"] = json::array({*exp_trials});
      // Precedence: flags, then the config file, then the default seed.
      if (exp_seed)
        overrides["base_seed"] = json::array({*exp_seed});
      TrialConfig base;
      base.base_seed = default_seed();
      const auto configs = expand_config_document(doc, overrides, base);
      const std::uint64_t base_seed = configs.empty() ? base.base_seed : configs.front().base_seed;

      std::filesystem::path csv_path = exp_out;
      auto sidecar = csv_path;
      sidecar.replace_extension(".json");
      std::ostringstream csv;
      csv << experiment_csv_header << "\n";
      json summaries = json::array();
      std::string failure;
      try {
        run_grid(configs, exp_parallel, [&](const ConfigOutcome& outcome) {
          write_experiment_rows(csv, outcome.summary);
          summaries.push_back(metrics_summary_json(outcome.summary));
          // Flush after each config so partial results survive a later failure.
          write_file_atomic(csv_path, csv.str());
        });
      } catch (const std::exception& e) {
        failure = e.what();
      }
      write_file_atomic(csv_path, csv.str());
      json side{{"configs", json::array()}, {"summaries", summaries}, {"tool_version", tool_version}};
      for (const auto& c : configs)
        side["configs"].push_back(trial_config_json(c));
      if (!failure.empty())
        side["failure"] = failure;
      write_file_atomic(sidecar, side.dump(2) + "\n");
      RunManifest manifest;
      manifest.command = "experiment";
      manifest.seed = base_seed;
      manifest.config = json{{"config_file", exp_config}, {"document", doc},
                             {"overrides", overrides}, {"parallel", exp_parallel}, {"argv", echo}};
      manifest.outputs = {csv_path.string(), sidecar.string()};
      write_manifest(csv_path, manifest);
      if (!failure.empty()) {
        err << "error: " << failure << "\n";
        return runtime_failure;
      }
      out << "wrote " << 2 * configs.size() << " rows to " << csv_path.string() << "\n";
      return ok;
    }
    if (*st) {
      const std::uint64_t seed = st_seed.value_or(default_seed());
      const auto wanted = [&](const std::string& name) {
        return st_only.empty() || std::find(st_only.begin(), st_only.end(), name) != st_only.end();
      };
      std::vector<OracleReport> reports;
      if (wanted("moments"))
        reports.push_back(oracle_moments());
      if (wanted("palm"))
        reports.push_back(oracle_palm(st_quick, seed));
      if (wanted("bh"))
        reports.push_back(oracle_bh(st_quick, seed));
      if (wanted("two-sample"))
        reports.push_back(oracle_two_sample(st_quick, seed));
      bool all = true;
      for (const auto& r : reports) {
        out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
        all = all && r.passed;
      }
      return all ? ok : runtime_failure;
    }
  } catch (const usage_error& e) {
    err << "error: " << e.what() << "\n";
    return usage;
  } catch (const invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return usage;
  } catch (const format_error& e) {
    err << "error: " << e.what() << "\n";
    return input_format;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return runtime_failure;
  }
  return usage;
}

} // namespace peakfdr::cli

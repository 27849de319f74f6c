#pragma once

// File formats: measurement CSV and binary, candidate CSV, detection JSON,
// experiment CSV with JSON sidecar, and run manifests.

#include "peakfdr/error.hpp"
#include "peakfdr/experiment.hpp"
#include "peakfdr/pipeline.hpp"
#include "peakfdr/signal_model.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace peakfdr {

using json = nlohmann::json;

inline constexpr const char* tool_version = "0.1.0";

// Shortest representation that parses back to the same double.
inline std::string format_double(double v)
{
  if (std::isnan(v))
    return "nan";
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// ---- measurements ---------------------------------------------------------

inline void write_measurement_csv(std::ostream& os, const Measurement& m,
                                  const std::vector<double>& mu, const std::vector<double>& z)
{
  require(mu.size() == m.size() && z.size() == m.size(), "write_measurement_csv: length mismatch");
  os << "index,t,mu,z,y\n";
  for (std::size_t i = 0; i < m.size(); ++i)
    os << i << ',' << format_double(m.time(i)) << ',' << format_double(mu[i]) << ','
       << format_double(z[i]) << ',' << format_double(m.samples[i]) << '\n';
}

inline void write_measurement_csv(std::ostream& os, const SynthesisParts& parts)
{
  write_measurement_csv(os, parts.measurement, parts.mu, parts.z);
}

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep)
{
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' '))
      cell.pop_back();
    out.push_back(cell);
  }
  return out;
}

inline double parse_double(const std::string& s)
{
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size())
      throw format_error("trailing characters in number '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw format_error("not a number: '" + s + "'");
  }
}

} // namespace detail

/// Reads a CSV with a header naming at least a `y` column. Grid spacing and
/// origin come from the `t` column when present.
inline Measurement read_measurement_csv(std::istream& is)
{
  std::string line;
  if (!std::getline(is, line))
    throw format_error("measurement CSV is empty");
  const auto header = detail::split(line, ',');
  std::ptrdiff_t y_col = -1, t_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "y")
      y_col = static_cast<std::ptrdiff_t>(i);
    if (header[i] == "t")
      t_col = static_cast<std::ptrdiff_t>(i);
  }
  if (y_col < 0)
    throw format_error("measurement CSV has no 'y' column");
  Measurement m;
  std::vector<double> t;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r")
      continue;
    const auto cells = detail::split(line, ',');
    if (cells.size() != header.size())
      throw format_error("measurement CSV row has " + std::to_string(cells.size()) +
                         " cells, expected " + std::to_string(header.size()));
    m.samples.push_back(detail::parse_double(cells[static_cast<std::size_t>(y_col)]));
    if (t_col >= 0)
      t.push_back(detail::parse_double(cells[static_cast<std::size_t>(t_col)]));
  }
  if (m.samples.size() < 3)
    throw format_error("measurement CSV needs at least 3 rows");
  if (!t.empty()) {
    m.origin = t.front();
    m.dt = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
    if (!(m.dt > 0))
      throw format_error("measurement CSV time column is not increasing");
    for (std::size_t i = 0; i < t.size(); ++i)
      if (std::abs(t[i] - m.time(i)) > 1e-6 * m.dt)
        throw format_error("measurement CSV time column is not a uniform grid");
  }
  for (double v : m.samples)
    if (!std::isfinite(v))
      throw format_error("measurement CSV contains non-finite samples");
  return m;
}

// Binary layout, native little-endian: uint64 L, float64 dt, float64 origin,
// then L float64 samples.
inline void write_measurement_binary(std::ostream& os, const Measurement& m)
{
  const std::uint64_t n = m.size();
  os.write(reinterpret_cast<const char*>(&n), sizeof n);
  os.write(reinterpret_cast<const char*>(&m.dt), sizeof m.dt);
  os.write(reinterpret_cast<const char*>(&m.origin), sizeof m.origin);
  os.write(reinterpret_cast<const char*>(m.samples.data()),
           static_cast<std::streamsize>(n * sizeof(double)));
}

inline Measurement read_measurement_binary(std::istream& is)
{
  std::uint64_t n = 0;
  Measurement m;
  if (!is.read(reinterpret_cast<char*>(&n), sizeof n) ||
      !is.read(reinterpret_cast<char*>(&m.dt), sizeof m.dt) ||
      !is.read(reinterpret_cast<char*>(&m.origin), sizeof m.origin))
    throw format_error("binary measurement header truncated");
  if (n < 3 || n > (std::uint64_t{1} << 32))
    throw format_error("binary measurement length out of range");
  m.samples.resize(n);
  if (!is.read(reinterpret_cast<char*>(m.samples.data()),
               static_cast<std::streamsize>(n * sizeof(double))))
    throw format_error("binary measurement samples truncated");
  try {
    m.validate();
  } catch (const invalid_argument& e) {
    throw format_error(e.what());
  }
  return m;
}

inline Measurement read_measurement_file(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw format_error("cannot open " + path.string());
  if (path.extension() == ".bin")
    return read_measurement_binary(in);
  return read_measurement_csv(in);
}

// ---- detections -----------------------------------------------------------

inline std::vector<int> neighbor_columns(const std::vector<Candidate>& candidates)
{
  std::vector<int> offsets;
  for (const auto& c : candidates)
    for (const auto& [off, _] : c.neighbor_heights)
      if (std::find(offsets.begin(), offsets.end(), off) == offsets.end())
        offsets.push_back(off);
  std::sort(offsets.begin(), offsets.end());
  return offsets;
}

inline std::string offset_label(int off)
{
  return (off > 0 ? "+" : "") + std::to_string(off);
}

inline void write_candidates_csv(std::ostream& os, const std::vector<Candidate>& candidates,
                                 double dt = 1.0, double origin = 0.0)
{
  const auto offsets = neighbor_columns(candidates);
  os << "index,t,height";
  for (int off : offsets)
    os << ",neighbor" << offset_label(off);
  os << ",p_value\n";
  for (const auto& c : candidates) {
    os << c.index << ',' << format_double(origin + static_cast<double>(c.index) * dt) << ','
       << format_double(c.height);
    for (int off : offsets) {
      const auto it = c.neighbor_heights.find(off);
      os << ',' << (it == c.neighbor_heights.end() ? "" : format_double(it->second));
    }
    os << ',' << (c.p_value ? format_double(*c.p_value) : "") << '\n';
  }
}

// JSON numbers cannot hold infinities; they are written as null.
inline json number_or_null(double v)
{
  return std::isfinite(v) ? json(v) : json(nullptr);
}

inline json detection_params_json(const DetectionParams& p)
{
  return json{{"gamma", p.kernel.bandwidth},
              {"kernel_truncation", p.kernel.truncation},
              {"sigma", p.noise.sigma},
              {"nu", p.noise.bandwidth},
              {"alpha", p.alpha},
              {"moments_bandwidth", to_string(p.bandwidth)},
              {"K", p.neighbors.samples},
              {"d", p.neighbors.distance},
              {"policy", to_string(p.neighbors.policy)},
              {"mc_samples", p.neighbors.mc_samples},
              {"neighbor_floor", p.neighbor_floor},
              {"mc_seed", p.mc_seed},
              {"quadrature",
               {{"relative_tolerance", p.quadrature.relative_tolerance},
                {"absolute_tolerance", p.quadrature.absolute_tolerance},
                {"max_subdivisions", p.quadrature.max_subdivisions},
                {"infinite_tail_cutoff", p.quadrature.infinite_tail_cutoff}}}};
}

/// Schema: {method, params, candidates[], detected[], threshold}.
inline json detection_to_json(const DetectionResult& r)
{
  json candidates = json::array();
  for (const auto& c : r.candidates) {
    json neighbors = json::object();
    for (const auto& [off, h] : c.neighbor_heights)
      neighbors[offset_label(off)] = h;
    json item{{"index", c.index},
              {"t", r.origin + static_cast<double>(c.index) * r.dt},
              {"height", c.height},
              {"neighbors", neighbors},
              {"p_value", c.p_value ? json(*c.p_value) : json(nullptr)}};
    if (c.p_value_stderr)
      item["p_value_stderr"] = *c.p_value_stderr;
    candidates.push_back(std::move(item));
  }
  return json{{"method", r.method == DetectionMethod::one_sample ? "one-sample" : "two-sample"},
              {"params", detection_params_json(r.params)},
              {"candidates", candidates},
              {"detected", r.detected},
              {"threshold", r.bh_threshold ? json(*r.bh_threshold) : json(nullptr)}};
}

/// Structural validation of a detection JSON document; returns an empty
/// string when valid, otherwise the first problem found.
inline std::string validate_detection_json(const json& j)
{
  if (!j.is_object())
    return "document is not an object";
  for (const char* key : {"method", "params", "candidates", "detected", "threshold"})
    if (!j.contains(key))
      return std::string("missing key '") + key + "'";
  if (!j["method"].is_string() ||
      (j["method"] != "one-sample" && j["method"] != "two-sample"))
    return "method must be 'one-sample' or 'two-sample'";
  if (!j["params"].is_object())
    return "params must be an object";
  if (!j["candidates"].is_array() || !j["detected"].is_array())
    return "candidates and detected must be arrays";
  if (!j["threshold"].is_null() && !j["threshold"].is_number())
    return "threshold must be a number or null";
  std::set<std::size_t> indices;
  for (const auto& c : j["candidates"]) {
    for (const char* key : {"index", "t", "height", "neighbors", "p_value"})
      if (!c.contains(key))
        return std::string("candidate missing '") + key + "'";
    if (!c["index"].is_number_unsigned() || !c["height"].is_number())
      return "candidate index/height have wrong type";
    if (c["p_value"].is_number()) {
      const double p = c["p_value"];
      if (p < 0 || p > 1)
        return "candidate p_value outside [0, 1]";
    }
    indices.insert(c["index"].get<std::size_t>());
  }
  for (const auto& d : j["detected"]) {
    if (!d.is_number_unsigned() || !indices.count(d.get<std::size_t>()))
      return "detected index is not a candidate";
  }
  if (!j["detected"].empty() && j["threshold"].is_null())
    return "detections without a threshold";
  return {};
}

// ---- experiment -----------------------------------------------------------

inline json trial_config_json(const TrialConfig& c)
{
  json j{{"L", c.length},       {"n_signals", c.n_signals}, {"a", c.a},
         {"b", c.b},            {"c", c.c},                 {"sigma", c.sigma},
         {"nu", c.nu},          {"gamma", c.gamma},         {"alpha", c.alpha},
         {"d", c.d},            {"policy", to_string(c.policy)},
         {"n_trials", c.n_trials}, {"base_seed", c.base_seed},
         {"moments_bandwidth", to_string(c.bandwidth)}};
  j["min_gap"] = c.gap();
  return j;
}

inline const char* experiment_csv_header =
    "L,n_signals,a,b,c,sigma,nu,gamma,alpha,d,policy,n_trials,method,power,power_stderr,fdr,"
    "fdr_stderr,mean_V,mean_R";

inline std::string method_label(const char* base, const TrialConfig& c)
{
  // Raw-bandwidth runs are tagged so they stay distinguishable in the fixed columns.
  return c.bandwidth == MomentsBandwidth::raw ? std::string(base) + ":raw" : std::string(base);
}

inline void write_experiment_rows(std::ostream& os, const MetricsSummary& s)
{
  const auto& c = s.config;
  const auto row = [&](const std::string& method, const MethodSummary& m) {
    os << c.length << ',' << c.n_signals << ',' << format_double(c.a) << ',' << format_double(c.b)
       << ',' << format_double(c.c) << ',' << format_double(c.sigma) << ','
       << format_double(c.nu) << ',' << format_double(c.gamma) << ',' << format_double(c.alpha)
       << ',' << c.d << ',' << to_string(c.policy) << ',' << c.n_trials << ',' << method << ','
       << format_double(m.power) << ',' << format_double(m.power_stderr) << ','
       << format_double(m.fdr) << ',' << format_double(m.fdr_stderr) << ','
       << format_double(m.mean_v) << ',' << format_double(m.mean_r) << '\n';
  };
  row(method_label("one-sample", c), s.one_sample);
  row(method_label("two-sample", c), s.two_sample);
}

inline json method_summary_json(const MethodSummary& m)
{
  return json{{"power", m.power},
              {"power_stderr", m.power_stderr},
              {"fdr", m.fdr},
              {"fdr_stderr", m.fdr_stderr},
              {"fdr_conditional", m.fdr_conditional},
              {"rejection_rate", m.rejection_rate},
              {"mean_V", m.mean_v},
              {"mean_R", m.mean_r}};
}

inline json metrics_summary_json(const MetricsSummary& s)
{
  return json{{"config", trial_config_json(s.config)},
              {"one-sample", method_summary_json(s.one_sample)},
              {"two-sample", method_summary_json(s.two_sample)}};
}

// ---- files ----------------------------------------------------------------

/// Writes via a temporary sibling and rename, so readers never see a
/// partially written file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content)
{
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw error("cannot write " + tmp.string());
    out << content;
    if (!out.flush())
      throw error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

struct RunManifest
{
  std::string command;
  json config;
  std::uint64_t seed = 0;
  std::string version = tool_version;
  std::vector<std::string> outputs;

  json to_json() const
  {
    return json{{"command", command},
                {"config", config},
                {"seed", seed},
                {"tool_version", version},
                {"outputs", outputs}};
  }
};

inline std::filesystem::path manifest_path_for(const std::filesystem::path& output)
{
  auto p = output;
  p += ".manifest.json";
  return p;
}

inline void write_manifest(const std::filesystem::path& output, const RunManifest& manifest)
{
  write_file_atomic(manifest_path_for(output), manifest.to_json().dump(2) + "\n");
}

} // namespace peakfdr

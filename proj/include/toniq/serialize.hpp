#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "toniq/backend.hpp"
#include "toniq/errors.hpp"
#include "toniq/fleet.hpp"
#include "toniq/qubo.hpp"
#include "toniq/scoring.hpp"

namespace toniq {

using Json = nlohmann::ordered_json;

// JSON encodings of the persisted types. Decoders reject malformed documents
// with ValidationError; file helpers raise IoError.

namespace detail {

template <class T>
T get_field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ValidationError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad field '") + key + "': " + e.what());
  }
}

inline std::string edge_key(Edge e) {
  e = normalized(e);
  return std::to_string(e.first) + "-" + std::to_string(e.second);
}

inline Edge parse_edge_key(const std::string& s) {
  const auto dash = s.find('-');
  if (dash == std::string::npos || dash == 0 || dash + 1 == s.size()) {
    throw ValidationError("bad edge key '" + s + "'");
  }
  try {
    std::size_t used = 0;
    const auto a = std::stoull(s.substr(0, dash), &used);
    if (used != dash) throw ValidationError("bad edge key '" + s + "'");
    const auto b = std::stoull(s.substr(dash + 1), &used);
    if (used != s.size() - dash - 1) throw ValidationError("bad edge key '" + s + "'");
    return normalized({a, b});
  } catch (const std::logic_error&) {
    throw ValidationError("bad edge key '" + s + "'");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Instances

inline Json to_json(const QuboInstance& inst) {
  Json j;
  j["id"] = inst.id;
  j["n"] = inst.n();
  j["q"] = inst.q.rows();
  j["seed"] = inst.seed ? Json(*inst.seed) : Json(nullptr);
  j["ground_energy"] = inst.ground_energy;
  Json states = Json::array();
  for (const auto& s : inst.ground_states) states.push_back(to_string(s));
  j["ground_states"] = states;
  j["dec_states"] = inst.dec_states;
  return j;
}

/// Parses an instance and re-checks its stored ground truth.
inline QuboInstance instance_from_json(const Json& j) {
  QuboInstance inst;
  inst.id = detail::get_field<std::string>(j, "id");
  const auto n = detail::get_field<std::size_t>(j, "n");
  inst.q = QMatrix::from_rows(detail::get_field<std::vector<std::vector<double>>>(j, "q"));
  if (inst.q.size() != n) throw ValidationError("instance " + inst.id + ": n does not match q");
  if (j.contains("seed") && !j.at("seed").is_null()) inst.seed = detail::get_field<std::uint64_t>(j, "seed");
  inst.ground_energy = detail::get_field<double>(j, "ground_energy");
  for (const auto& s : detail::get_field<std::vector<std::string>>(j, "ground_states")) {
    inst.ground_states.push_back(parse_bitstring(s));
  }
  inst.dec_states = detail::get_field<std::vector<std::uint64_t>>(j, "dec_states");
  validate_instance(inst);
  return inst;
}

// ---------------------------------------------------------------------------
// Backends

inline Json to_json(const BackendModel& b) {
  Json j;
  j["name"] = b.name;
  j["num_qubits"] = b.num_qubits;
  Json coupling = Json::array();
  for (auto [x, y] : b.coupling) coupling.push_back({x, y});
  j["coupling"] = coupling;
  j["p1"] = b.p1;
  j["p2_default"] = b.p2_default;
  Json edges = Json::object();
  for (const auto& [e, p] : b.p2_edges) edges[detail::edge_key(e)] = p;
  j["p2_edges"] = edges;
  j["t1"] = b.t1;
  j["t2"] = b.t2;
  j["dur1"] = b.dur1;
  j["dur2"] = b.dur2;
  Json readout = Json::array();
  for (const auto& r : b.readout) readout.push_back({r.p01, r.p10});
  j["readout"] = readout;
  j["noiseless"] = b.noiseless;
  return j;
}

inline BackendModel backend_from_json(const Json& j) {
  BackendModel b;
  b.name = detail::get_field<std::string>(j, "name");
  b.num_qubits = detail::get_field<std::size_t>(j, "num_qubits");
  for (const auto& e : detail::get_field<std::vector<std::vector<std::size_t>>>(j, "coupling")) {
    if (e.size() != 2) throw ValidationError("coupling entries must be [a, b] pairs");
    b.coupling.emplace_back(e[0], e[1]);
  }
  b.p1 = detail::get_field<double>(j, "p1");
  b.p2_default = detail::get_field<double>(j, "p2_default");
  if (j.contains("p2_edges")) {
    const auto& edges = j.at("p2_edges");
    if (!edges.is_object()) throw ValidationError("p2_edges must be an object");
    for (const auto& [k, v] : edges.items()) {
      if (!v.is_number()) throw ValidationError("p2_edges values must be numbers");
      b.p2_edges[detail::parse_edge_key(k)] = v.get<double>();
    }
  }
  if (j.contains("t1")) b.t1 = detail::get_field<std::vector<double>>(j, "t1");
  if (j.contains("t2")) b.t2 = detail::get_field<std::vector<double>>(j, "t2");
  if (j.contains("dur1")) b.dur1 = detail::get_field<double>(j, "dur1");
  if (j.contains("dur2")) b.dur2 = detail::get_field<double>(j, "dur2");
  if (j.contains("readout")) {
    for (const auto& r : detail::get_field<std::vector<std::vector<double>>>(j, "readout")) {
      if (r.size() != 2) throw ValidationError("readout entries must be [p01, p10] pairs");
      b.readout.push_back({r[0], r[1]});
    }
  }
  if (j.contains("noiseless")) b.noiseless = detail::get_field<bool>(j, "noiseless");
  validate_backend(b);
  return b;
}

// ---------------------------------------------------------------------------
// Scoring

inline Json to_json(const ScoringCurve& c) {
  Json j;
  j["instance_id"] = c.instance_id;
  j["n_layers"] = c.n_layers;
  j["N_used"] = c.n_used;
  j["master_seed"] = c.master_seed;
  j["failures"] = c.failures;
  j["bins"] = c.bins();
  j["smoothing"] = c.smoothing;
  j["bin_edges"] = c.bin_edges;
  j["cdf"] = c.cdf;
  return j;
}

inline ScoringCurve curve_from_json(const Json& j) {
  ScoringCurve c;
  c.instance_id = detail::get_field<std::string>(j, "instance_id");
  c.n_layers = detail::get_field<std::size_t>(j, "n_layers");
  c.n_used = detail::get_field<std::size_t>(j, "N_used");
  c.master_seed = detail::get_field<std::uint64_t>(j, "master_seed");
  if (j.contains("failures")) c.failures = detail::get_field<std::size_t>(j, "failures");
  if (j.contains("smoothing")) c.smoothing = detail::get_field<double>(j, "smoothing");
  c.bin_edges = detail::get_field<std::vector<double>>(j, "bin_edges");
  c.cdf = detail::get_field<std::vector<double>>(j, "cdf");
  validate_curve(c);
  return c;
}

inline Json to_json(const AccuracySamples& s) {
  Json j;
  j["instance_id"] = s.instance_id;
  j["n_layers"] = s.n_layers;
  j["backend_name"] = s.backend_name;
  j["master_seed"] = s.master_seed;
  j["failures"] = s.failures;
  j["values"] = s.values;
  return j;
}

inline AccuracySamples samples_from_json(const Json& j) {
  AccuracySamples s;
  s.instance_id = detail::get_field<std::string>(j, "instance_id");
  s.n_layers = detail::get_field<std::size_t>(j, "n_layers");
  s.backend_name = detail::get_field<std::string>(j, "backend_name");
  s.master_seed = detail::get_field<std::uint64_t>(j, "master_seed");
  if (j.contains("failures")) s.failures = detail::get_field<std::size_t>(j, "failures");
  s.values = detail::get_field<std::vector<double>>(j, "values");
  for (double x : s.values) check_accuracy(x);
  return s;
}

inline Json to_json(const RepeatStats& r) {
  Json j;
  j["mean"] = r.mean;
  j["std"] = r.std;
  j["ci95_mean"] = {r.ci95_mean[0], r.ci95_mean[1]};
  j["ci95_std"] = {r.ci95_std[0], r.ci95_std[1]};
  j["repeats"] = r.repeats;
  j["scores"] = r.scores;
  return j;
}

inline Json to_json(const HScoreReport& r) {
  Json j;
  j["instance_id"] = r.instance_id;
  j["n_layers"] = r.n_layers;
  j["backend_name"] = r.backend_name;
  j["h_score"] = r.h_score;
  j["M_used"] = r.m_used;
  j["per_run_retained"] = r.per_run_retained;
  if (r.per_run_retained) j["per_run_scores"] = r.per_run_scores;
  j["repeat_stats"] = r.repeat_stats ? to_json(*r.repeat_stats) : Json(nullptr);
  return j;
}

inline HScoreReport report_from_json(const Json& j) {
  HScoreReport r;
  r.instance_id = detail::get_field<std::string>(j, "instance_id");
  r.n_layers = detail::get_field<std::size_t>(j, "n_layers");
  r.backend_name = detail::get_field<std::string>(j, "backend_name");
  r.h_score = detail::get_field<double>(j, "h_score");
  r.m_used = detail::get_field<std::size_t>(j, "M_used");
  r.per_run_retained = detail::get_field<bool>(j, "per_run_retained");
  if (r.per_run_retained) r.per_run_scores = detail::get_field<std::vector<double>>(j, "per_run_scores");
  if (j.contains("repeat_stats") && !j.at("repeat_stats").is_null()) {
    const auto& s = j.at("repeat_stats");
    RepeatStats st;
    st.mean = detail::get_field<double>(s, "mean");
    st.std = detail::get_field<double>(s, "std");
    const auto cm = detail::get_field<std::vector<double>>(s, "ci95_mean");
    const auto cs = detail::get_field<std::vector<double>>(s, "ci95_std");
    if (cm.size() != 2 || cs.size() != 2) throw ValidationError("confidence intervals need two bounds");
    st.ci95_mean[0] = cm[0];
    st.ci95_mean[1] = cm[1];
    st.ci95_std[0] = cs[0];
    st.ci95_std[1] = cs[1];
    st.repeats = detail::get_field<std::size_t>(s, "repeats");
    if (s.contains("scores")) st.scores = detail::get_field<std::vector<double>>(s, "scores");
    r.repeat_stats = st;
  }
  if (!(r.h_score >= 0.0 && r.h_score <= 2.0)) throw ValidationError("h_score outside [0, 2]");
  return r;
}

// ---------------------------------------------------------------------------
// Fleet

inline Json to_json(const FleetRanking& r) {
  Json j;
  j["instance_id"] = r.instance_id;
  j["n_layers"] = r.n_layers;
  Json entries = Json::array();
  for (const auto& e : r.entries) entries.push_back({{"backend_name", e.backend_name}, {"h_score", e.h_score}});
  j["entries"] = entries;
  Json excluded = Json::array();
  for (const auto& w : r.excluded) excluded.push_back({{"backend_name", w.backend_name}, {"warning", w.message}});
  j["excluded"] = excluded;
  return j;
}

inline Json to_json(const SelectionOutcome& o) {
  Json j;
  j["strategy"] = strategy_name(o.strategy);
  j["pooling"] = o.pooling;
  j["chosen"] = o.chosen;
  j["pooled_report"] = to_json(o.pooled_report);
  if (o.strategy == Strategy::RandomK) {
    j["trials"] = o.trials;
    j["trial_mean"] = o.trial_mean;
    j["trial_std"] = o.trial_std;
    j["trial_scores"] = o.trial_scores;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Files

/// Stable text form: two-space indent, trailing newline.
inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + path.string());
  return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw IoError("error writing " + path.string());
}

inline Json read_json(const std::filesystem::path& path) {
  const auto text = read_text(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

inline void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, dump(j)); }

inline QuboInstance load_instance(const std::filesystem::path& p) { return instance_from_json(read_json(p)); }
inline BackendModel load_backend(const std::filesystem::path& p) { return backend_from_json(read_json(p)); }
inline ScoringCurve load_curve(const std::filesystem::path& p) { return curve_from_json(read_json(p)); }
inline AccuracySamples load_samples(const std::filesystem::path& p) {
  return samples_from_json(read_json(p));
}

/// A fleet file is a JSON list of backend file paths, resolved relative to
/// the fleet file.
inline std::vector<BackendModel> load_fleet(const std::filesystem::path& p) {
  const auto j = read_json(p);
  if (!j.is_array() || j.empty()) throw ValidationError(p.string() + ": fleet must be a non-empty list of paths");
  std::vector<BackendModel> out;
  for (const auto& e : j) {
    if (!e.is_string()) throw ValidationError(p.string() + ": fleet entries must be paths");
    std::filesystem::path bp = e.get<std::string>();
    if (bp.is_relative()) bp = p.parent_path() / bp;
    out.push_back(load_backend(bp));
  }
  return out;
}

}  // namespace toniq

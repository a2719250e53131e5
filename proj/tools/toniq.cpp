// toniq command-line interface. Every command writes JSON (and CSV where
// tabular) under the output root and prints the written paths.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "toniq/toniq.hpp"

namespace fs = std::filesystem;
using namespace toniq;

namespace {

#ifndef TONIQ_VERSION
#define TONIQ_VERSION "dev"
#endif

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitContext = 3;
constexpr int kExitRuntime = 4;
constexpr int kExitIo = 5;

struct Profile {
  std::size_t n_reference;
  std::size_t m_runs;
  std::size_t repeats;
  const char* name;
};

constexpr Profile kDefaultProfile{kDefaultReferenceRuns, kDefaultScoringRuns, kDefaultRepeats, "default"};
constexpr Profile kFastProfile{2000, 300, 30, "fast"};

struct Common {
  std::uint64_t seed = 0;
  std::string out;
  unsigned jobs = 0;
  bool fast = false;

  const Profile& profile() const { return fast ? kFastProfile : kDefaultProfile; }

  fs::path root() const {
    if (!out.empty()) return out;
    if (const char* env = std::getenv("TONIQ_DATA_DIR"); env && *env) return env;
    return "toniq_results";
  }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Master seed")->capture_default_str();
  cmd->add_option("--out", c.out, "Output root (default: $TONIQ_DATA_DIR or ./toniq_results)");
  cmd->add_option("--jobs", c.jobs, "Parallel runs (0 = all cores)")->capture_default_str();
  cmd->add_flag("--fast", c.fast, "CI profile: N=2000, M=300, repeats=30");
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Json provenance(const std::string& command, const Json& config, const Common& c) {
  Json p;
  p["tool"] = "toniq";
  p["version"] = TONIQ_VERSION;
  p["command"] = command;
  p["seed"] = c.seed;
  p["profile"] = c.profile().name;
  p["config"] = config;
  p["config_hash"] = hex64(fnv1a(config.dump()));
  return p;
}

Json with_provenance(Json body, const char* kind, const Json& prov) {
  Json j;
  j["kind"] = kind;
  for (auto& [k, v] : body.items()) j[k] = v;
  j["provenance"] = prov;
  return j;
}

void emit(const fs::path& path, const std::string& text) {
  write_text(path, text);
  std::cout << "wrote " << path.string() << "\n";
}

// ---------------------------------------------------------------------------
// Input resolution

QuboInstance resolve_instance(const std::string& sel) {
  if (!sel.empty() && sel.find_first_not_of("0123456789") == std::string::npos) {
    return builtin_instances(std::stoul(sel));
  }
  return load_instance(sel);
}

BackendModel resolve_backend(const std::string& sel, const QuboInstance& inst) {
  if (sel == "noiseless") return ideal_backend(inst.n());
  return load_backend(sel);
}

std::vector<std::size_t> check_layers(const std::vector<std::size_t>& layers) {
  if (layers.empty()) throw ValidationError("at least one layer count is required");
  for (auto l : layers)
    if (l == 0) throw ValidationError("n_layers must be >= 1");
  return layers;
}

SamplingOptions sampling(const Common& c, bool mitigate, std::size_t shots) {
  SamplingOptions o;
  o.jobs = c.jobs;
  o.run.mitigate_readout = mitigate;
  o.run.shots = shots;
  return o;
}

fs::path curve_path(const Common& c, const std::string& inst, std::size_t layers, std::size_t n) {
  return c.root() / "curves" /
         (safe_name(inst) + "_p" + std::to_string(layers) + "_N" + std::to_string(n) + "_s" +
          std::to_string(c.seed) + ".json");
}

/// Loads the cached curve for (instance, layers, N, seed), building and
/// persisting it on a miss.
ScoringCurve obtain_curve(const Common& c, const QuboInstance& inst, std::size_t layers, std::size_t n) {
  const auto path = curve_path(c, inst.id, layers, n);
  if (fs::exists(path)) {
    auto curve = load_curve(path);
    if (curve.instance_id == inst.id && curve.n_layers == layers && curve.n_used + curve.failures == n &&
        curve.master_seed == c.seed && curve.bins() == kDefaultBins && curve.smoothing == kDefaultSmoothing) {
      return curve;
    }
  }
  std::cout << "building reference curve: " << inst.id << " p=" << layers << " N=" << n << "\n";
  const auto samples = reference_samples(inst, layers, n, c.seed, sampling(c, false, 0));
  auto curve = curve_from_samples(samples);
  Json cfg{{"instance", inst.id}, {"n_layers", layers}, {"N", n}, {"bins", curve.bins()},
           {"smoothing", curve.smoothing}};
  const auto prov = provenance("reference", cfg, c);
  emit(path, dump(with_provenance(to_json(curve), "curve", prov)));
  auto spath = path;
  spath.replace_extension(".samples.json");
  emit(spath, dump(with_provenance(to_json(samples), "reference_samples", prov)));
  return curve;
}

std::string run_csv(const std::vector<RunRecord>& runs, const ScoringCurve& curve) {
  std::ostringstream os;
  os.precision(17);
  os << "run_index,seed,accuracy,final_cost,evals_used,score\n";
  for (const auto& r : runs) {
    os << r.index << "," << r.seed << ",";
    if (r.failed) {
      os << ",,,\n";
      continue;
    }
    os << r.result.accuracy << "," << r.result.final_cost << "," << r.result.evals_used << ","
       << evaluate_curve(curve, r.result.accuracy) << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Commands

struct GenerateArgs {
  std::size_t n = 3;
  std::string id;
  std::string output;
  std::size_t probe_runs = GenerationOptions{}.probe_runs;
};

int cmd_generate(const Common& c, const GenerateArgs& a) {
  GenerationOptions opt;
  opt.jobs = c.jobs;
  opt.probe_runs = a.probe_runs;
  auto inst = generate_instance(a.n, c.seed, opt);
  if (!a.id.empty()) inst.id = a.id;
  const fs::path path = a.output.empty() ? c.root() / "instances" / (safe_name(inst.id) + ".json") : fs::path(a.output);
  emit(path, dump(to_json(inst)));
  std::cout << inst.id << ": ground_energy " << inst.ground_energy << ", ground state "
            << to_string(inst.ground_states.front()) << "\n";
  return kExitOk;
}

struct PresetArgs {
  std::string topology;
  std::string name;
  std::string output;
  NoiseDefaults noise;
  std::vector<std::string> edge_p2;
};

int cmd_preset(const Common& c, PresetArgs a) {
  BackendModel b;
  if (a.topology.rfind("line:", 0) == 0) {
    b = line_backend(std::stoul(a.topology.substr(5)), a.noise, a.topology);
  } else {
    b = topology_preset(parse_topology(a.topology), a.noise);
  }
  if (!a.name.empty()) b.name = a.name;
  for (const auto& spec : a.edge_p2) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) throw ValidationError("--edge-p2 expects a-b=value, got '" + spec + "'");
    b.p2_edges[detail::parse_edge_key(spec.substr(0, eq))] = std::stod(spec.substr(eq + 1));
  }
  validate_backend(b);
  const fs::path path = a.output.empty() ? c.root() / "backends" / (safe_name(b.name) + ".json") : fs::path(a.output);
  emit(path, dump(to_json(b)));
  return kExitOk;
}

struct ReferenceArgs {
  std::string instance;
  std::vector<std::size_t> layers{1};
  std::optional<std::size_t> n;
};

int cmd_reference(const Common& c, const ReferenceArgs& a) {
  const auto inst = resolve_instance(a.instance);
  const std::size_t n = a.n.value_or(c.profile().n_reference);
  if (n < kMinReferenceRuns) {
    throw ValidationError("N must be >= " + std::to_string(kMinReferenceRuns) + ", got " + std::to_string(n));
  }
  for (auto l : check_layers(a.layers)) {
    const auto curve = obtain_curve(c, inst, l, n);
    const auto path = curve_path(c, inst.id, l, n);
    std::cout << path.string() << ": N_used " << curve.n_used << ", failures " << curve.failures
              << ", F(0.5) " << evaluate_curve(curve, 0.5) << "\n";
  }
  return kExitOk;
}

struct ScoreArgs {
  std::string instance;
  std::string backend = "noiseless";
  std::vector<std::size_t> layers{1};
  std::optional<std::size_t> n;
  std::optional<std::size_t> m;
  std::string curve;
  bool mitigate = false;
  std::size_t shots = 0;
  std::string synthetic;
  bool retain = false;
};

int cmd_score(const Common& c, const ScoreArgs& a) {
  const auto inst = resolve_instance(a.instance);
  const std::size_t n = a.n.value_or(c.profile().n_reference);
  const std::size_t m = a.m.value_or(c.profile().m_runs);
  if (m == 0) throw ValidationError("M must be >= 1");
  std::optional<BackendModel> backend;
  std::string backend_name;
  if (a.synthetic.empty()) {
    backend = resolve_backend(a.backend, inst);
    backend_name = backend->name;
  } else if (a.synthetic == "perfect" || a.synthetic == "zero") {
    backend_name = "synthetic_" + a.synthetic;
  } else {
    throw ValidationError("--synthetic must be 'perfect' or 'zero'");
  }

  for (auto l : check_layers(a.layers)) {
    const auto curve = a.curve.empty() ? obtain_curve(c, inst, l, n) : load_curve(a.curve);
    std::vector<RunRecord> runs;
    if (backend) {
      runs = collect_runs(inst, *backend, l, m, c.seed, SeedStream::kScoring, sampling(c, a.mitigate, a.shots));
    } else {
      runs.resize(m);
      for (std::size_t i = 0; i < m; ++i) {
        runs[i].index = i;
        runs[i].seed = derive_seed(c.seed, SeedStream::kScoring, i);
        runs[i].result.accuracy = a.synthetic == "perfect" ? 1.0 : 0.0;
      }
    }
    const auto samples = samples_from_runs(runs, inst, l, backend_name, c.seed, SamplingOptions{}.failure_budget);
    const auto report = h_score(samples, curve, a.retain);

    Json cfg{{"instance", inst.id}, {"backend", backend_name}, {"n_layers", l},
             {"N", a.curve.empty() ? Json(n) : Json(curve.n_used)}, {"M", m},
             {"curve", a.curve.empty() ? Json(nullptr) : Json(a.curve)},
             {"mitigate_readout", a.mitigate}, {"shots", a.shots}};
    if (backend) cfg["backend_config_hash"] = hex64(fnv1a(to_json(*backend).dump()));
    const auto prov = provenance("score", cfg, c);
    const auto stem = safe_name(backend_name) + "_" + safe_name(inst.id) + "_p" + std::to_string(l);
    emit(c.root() / "scores" / (stem + ".json"), dump(with_provenance(to_json(report), "score_report", prov)));
    emit(c.root() / "scores" / (stem + ".csv"), run_csv(runs, curve));
    emit(c.root() / "samples" / (stem + ".json"), dump(with_provenance(to_json(samples), "samples", prov)));
    std::cout << backend_name << " " << inst.id << " p=" << l << ": H-Score " << report.h_score
              << " (M_used " << report.m_used << ", failures " << samples.failures << ")\n";
  }
  return kExitOk;
}

struct FleetArgs {
  std::string fleet;
  std::string instance;
  std::size_t layers = 1;
  std::optional<std::size_t> n;
  std::optional<std::size_t> m;
  std::string curve;
  bool mitigate = false;
  std::size_t k = 1;
  std::string strategy = "ranked_top_k";
  std::size_t trials = kDefaultSelectionTrials;
};

Json fleet_config(const FleetArgs& a, const QuboInstance& inst, const std::vector<BackendModel>& fleet,
                  std::size_t n, std::size_t m) {
  Json names = Json::array();
  std::string all;
  for (const auto& b : fleet) {
    names.push_back(b.name);
    all += to_json(b).dump();
  }
  return Json{{"instance", inst.id}, {"fleet", a.fleet}, {"backends", names},
              {"fleet_config_hash", hex64(fnv1a(all))}, {"n_layers", a.layers}, {"N", n}, {"M", m},
              {"curve", a.curve.empty() ? Json(nullptr) : Json(a.curve)}, {"mitigate_readout", a.mitigate}};
}

int cmd_rank(const Common& c, const FleetArgs& a) {
  const auto inst = resolve_instance(a.instance);
  const auto fleet = load_fleet(a.fleet);
  const std::size_t n = a.n.value_or(c.profile().n_reference);
  const std::size_t m = a.m.value_or(c.profile().m_runs);
  check_layers({a.layers});
  const auto curve = a.curve.empty() ? obtain_curve(c, inst, a.layers, n) : load_curve(a.curve);
  const auto ranking = rank_fleet(fleet, inst, a.layers, m, curve, c.seed, sampling(c, a.mitigate, 0));
  const auto prov = provenance("rank", fleet_config(a, inst, fleet, n, m), c);
  const auto stem = "rank_" + safe_name(inst.id) + "_p" + std::to_string(a.layers);
  emit(c.root() / "fleet" / (stem + ".json"), dump(with_provenance(to_json(ranking), "fleet_ranking", prov)));
  std::ostringstream csv;
  csv.precision(17);
  csv << "rank,backend,h_score\n";
  for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
    csv << i + 1 << "," << ranking.entries[i].backend_name << "," << ranking.entries[i].h_score << "\n";
  }
  emit(c.root() / "fleet" / (stem + ".csv"), csv.str());
  for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
    std::cout << i + 1 << ". " << ranking.entries[i].backend_name << " " << ranking.entries[i].h_score << "\n";
  }
  for (const auto& w : ranking.excluded) std::cerr << "warning: excluded " << w.backend_name << ": " << w.message << "\n";
  return kExitOk;
}

int cmd_select(const Common& c, const FleetArgs& a) {
  const auto inst = resolve_instance(a.instance);
  const auto fleet = load_fleet(a.fleet);
  const std::size_t n = a.n.value_or(c.profile().n_reference);
  const std::size_t m = a.m.value_or(c.profile().m_runs);
  check_layers({a.layers});
  SelectionConfig sc;
  sc.strategy = parse_strategy(a.strategy);
  sc.k = a.k;
  sc.trials = a.trials;
  sc.seed = c.seed;
  const auto curve = a.curve.empty() ? obtain_curve(c, inst, a.layers, n) : load_curve(a.curve);
  const auto outcome = select_and_pool(fleet, inst, a.layers, m, curve, sc, sampling(c, a.mitigate, 0));
  auto cfg = fleet_config(a, inst, fleet, n, m);
  cfg["strategy"] = a.strategy;
  cfg["k"] = a.k;
  if (sc.strategy == Strategy::RandomK) cfg["trials"] = a.trials;
  const auto prov = provenance("select", cfg, c);
  const auto stem = "select_" + a.strategy + "_k" + std::to_string(a.k) + "_" + safe_name(inst.id) + "_p" +
                    std::to_string(a.layers);
  emit(c.root() / "fleet" / (stem + ".json"), dump(with_provenance(to_json(outcome), "selection_outcome", prov)));
  std::cout << a.strategy << " k=" << a.k << ": pooled H-Score " << outcome.pooled_report.h_score;
  if (sc.strategy == Strategy::RandomK) {
    std::cout << ", mean over " << outcome.trials << " trials " << outcome.trial_mean << " (std "
              << outcome.trial_std << ")";
  }
  std::cout << "\n";
  return kExitOk;
}

struct CompareArgs {
  std::string a;
  std::string b;
};

int cmd_compare(const Common& c, const CompareArgs& a) {
  const auto sa = load_samples(a.a);
  const auto sb = load_samples(a.b);
  const double value = compare_distr(sa, sb);
  Json cfg{{"samples_a", a.a}, {"samples_b", a.b}};
  const auto prov = provenance("compare", cfg, c);
  Json body{{"instance_id", sa.instance_id}, {"n_layers", sa.n_layers}, {"backend_a", sa.backend_name},
            {"backend_b", sb.backend_name}, {"size_a", sa.values.size()}, {"size_b", sb.values.size()},
            {"value", value}};
  const auto stem = "compare_" + safe_name(fs::path(a.a).stem().string()) + "_vs_" +
                    safe_name(fs::path(a.b).stem().string());
  emit(c.root() / "compare" / (stem + ".json"), dump(with_provenance(body, "comparison", prov)));
  std::cout << "compare_distr = " << value << (value > 1.0 ? " (a outperforms b)" : value < 1.0 ? " (a underperforms b)" : "") << "\n";
  return kExitOk;
}

struct RobustnessArgs {
  std::string instance;
  std::string backend = "noiseless";
  std::size_t layers = 1;
  std::optional<std::size_t> n;
  std::optional<std::size_t> m;
  std::optional<std::size_t> repeats;
  std::string curve;
  bool mitigate = false;
  bool fixed_seed = false;
};

int cmd_robustness(const Common& c, const RobustnessArgs& a) {
  const auto inst = resolve_instance(a.instance);
  const auto backend = resolve_backend(a.backend, inst);
  const std::size_t n = a.n.value_or(c.profile().n_reference);
  RobustnessConfig rc;
  rc.m_runs = a.m.value_or(c.profile().m_runs);
  rc.repeats = a.repeats.value_or(c.profile().repeats);
  rc.master_seed = c.seed;
  rc.fixed_seed = a.fixed_seed;
  check_layers({a.layers});
  const auto curve = a.curve.empty() ? obtain_curve(c, inst, a.layers, n) : load_curve(a.curve);
  const auto report = robustness(inst, backend, a.layers, curve, rc, sampling(c, a.mitigate, 0));
  Json cfg{{"instance", inst.id}, {"backend", backend.name},
           {"backend_config_hash", hex64(fnv1a(to_json(backend).dump()))}, {"n_layers", a.layers},
           {"N", a.curve.empty() ? Json(n) : Json(curve.n_used)}, {"M", rc.m_runs}, {"repeats", rc.repeats},
           {"fixed_seed", a.fixed_seed}, {"curve", a.curve.empty() ? Json(nullptr) : Json(a.curve)},
           {"mitigate_readout", a.mitigate}};
  const auto prov = provenance("robustness", cfg, c);
  const auto stem = safe_name(backend.name) + "_" + safe_name(inst.id) + "_p" + std::to_string(a.layers);
  emit(c.root() / "robustness" / (stem + ".json"), dump(with_provenance(to_json(report), "robustness_report", prov)));
  std::ostringstream csv;
  csv.precision(17);
  csv << "repeat,h_score\n";
  const auto& st = *report.repeat_stats;
  for (std::size_t i = 0; i < st.scores.size(); ++i) csv << i << "," << st.scores[i] << "\n";
  emit(c.root() / "robustness" / (stem + ".csv"), csv.str());
  std::cout << "mean " << st.mean << " [" << st.ci95_mean[0] << ", " << st.ci95_mean[1] << "], std " << st.std
            << " [" << st.ci95_std[0] << ", " << st.ci95_std[1] << "] over " << st.repeats << " repeats\n";
  return kExitOk;
}

struct ReportArgs {
  std::string results;
};

int cmd_report(const Common& c, const ReportArgs& a) {
  const fs::path results = a.results.empty() ? c.root() : fs::path(a.results);
  const fs::path dest = results / "report";
  const auto files = build_report(results, fs::exists(dest) ? dest : fs::path{});
  for (const auto& [name, text] : files) emit(dest / name, text);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"toniq: QAOA-based H-Score benchmarking of simulated quantum backends"};
  app.set_version_flag("--version", std::string("toniq ") + TONIQ_VERSION);
  app.require_subcommand(1);

  Common common;
  int rc = kExitOk;
  std::function<int()> action;

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate a random QUBO instance that passes the difficulty window");
  add_common(g, common);
  g->add_option("--n", gen.n, "Qubits (3..8)")->required();
  g->add_option("--id", gen.id, "Instance id (default gen_q<n>_s<seed>)");
  g->add_option("--output,-o", gen.output, "Output file");
  g->add_option("--probe-runs", gen.probe_runs, "Noiseless probe runs per candidate")->capture_default_str();
  g->callback([&] { action = [&] { return cmd_generate(common, gen); }; });

  PresetArgs pre;
  auto* p = app.add_subcommand("preset", "Write a backend model from a topology preset");
  add_common(p, common);
  p->add_option("--topology", pre.topology, "heavy_hex_16, two_line_27, i_shape_7 or line:<n>")->required();
  p->add_option("--name", pre.name, "Backend name");
  p->add_option("--output,-o", pre.output, "Output file");
  p->add_option("--p1", pre.noise.p1, "Single-qubit depolarizing probability");
  p->add_option("--p2", pre.noise.p2, "Two-qubit depolarizing probability");
  p->add_option("--edge-p2", pre.edge_p2, "Per-edge override a-b=value (repeatable)");
  p->add_option("--t1", pre.noise.t1, "T1 for every qubit (us)");
  p->add_option("--t2", pre.noise.t2, "T2 for every qubit (us)");
  p->add_option("--dur1", pre.noise.dur1, "Single-qubit gate duration (us)")->capture_default_str();
  p->add_option("--dur2", pre.noise.dur2, "Two-qubit gate duration (us)")->capture_default_str();
  p->add_option("--readout-p01", pre.noise.readout.p01, "P(read 1 | prepared 0)");
  p->add_option("--readout-p10", pre.noise.readout.p10, "P(read 0 | prepared 1)");
  p->add_flag("--noiseless", pre.noise.noiseless, "Mark the backend noiseless");
  p->callback([&] { action = [&] { return cmd_preset(common, pre); }; });

  ReferenceArgs ref;
  auto* r = app.add_subcommand("reference", "Build the noiseless reference scoring curve");
  add_common(r, common);
  r->add_option("--instance", ref.instance, "Built-in size (3..6) or instance file")->required();
  r->add_option("--layers", ref.layers, "Layer count(s), comma separated")->delimiter(',');
  r->add_option("--N", ref.n, "Reference runs");
  r->callback([&] { action = [&] { return cmd_reference(common, ref); }; });

  ScoreArgs sc;
  auto* s = app.add_subcommand("score", "H-Score a backend for one or more layer counts");
  add_common(s, common);
  s->add_option("--instance", sc.instance, "Built-in size (3..6) or instance file")->required();
  s->add_option("--backend", sc.backend, "Backend file or 'noiseless'")->capture_default_str();
  s->add_option("--layers", sc.layers, "Layer count(s), comma separated")->delimiter(',');
  s->add_option("--N", sc.n, "Reference runs when building the curve");
  s->add_option("--M", sc.m, "Scoring runs");
  s->add_option("--curve", sc.curve, "Use this curve file instead of the cache");
  s->add_flag("--mitigate", sc.mitigate, "Invert readout confusion before scoring");
  s->add_option("--shots", sc.shots, "Estimate the optimizer's cost from this many shots");
  s->add_option("--synthetic", sc.synthetic, "Test hook: 'perfect' or 'zero' accuracy sampler");
  s->add_flag("--retain-per-run", sc.retain, "Keep per-run scores in the report");
  s->callback([&] { action = [&] { return cmd_score(common, sc); }; });

  FleetArgs fl;
  auto add_fleet = [&](CLI::App* cmd) {
    add_common(cmd, common);
    cmd->add_option("--fleet", fl.fleet, "JSON list of backend files")->required();
    cmd->add_option("--instance", fl.instance, "Built-in size (3..6) or instance file")->required();
    cmd->add_option("--layers", fl.layers, "Layer count")->capture_default_str();
    cmd->add_option("--N", fl.n, "Reference runs when building the curve");
    cmd->add_option("--M", fl.m, "Scoring runs per backend");
    cmd->add_option("--curve", fl.curve, "Use this curve file instead of the cache");
    cmd->add_flag("--mitigate", fl.mitigate, "Invert readout confusion before scoring");
  };
  auto* rk = app.add_subcommand("rank", "Rank a fleet of backends by H-Score");
  add_fleet(rk);
  rk->callback([&] { action = [&] { return cmd_rank(common, fl); }; });
  auto* se = app.add_subcommand("select", "Pool k backends chosen by a strategy and score them");
  add_fleet(se);
  se->add_option("--k", fl.k, "Backends to choose")->required();
  se->add_option("--strategy", fl.strategy, "ranked_top_k, random_k or worst_k")->capture_default_str();
  se->add_option("--trials", fl.trials, "random_k trials")->capture_default_str();
  se->callback([&] { action = [&] { return cmd_select(common, fl); }; });

  CompareArgs cmp;
  auto* cm = app.add_subcommand("compare", "Score samples A against samples B as reference");
  add_common(cm, common);
  cm->add_option("a", cmp.a, "Samples file A")->required();
  cm->add_option("b", cmp.b, "Samples file B (reference)")->required();
  cm->callback([&] { action = [&] { return cmd_compare(common, cmp); }; });

  RobustnessArgs rb;
  auto* ro = app.add_subcommand("robustness", "Repeat the H-Score and fit a Gaussian");
  add_common(ro, common);
  ro->add_option("--instance", rb.instance, "Built-in size (3..6) or instance file")->required();
  ro->add_option("--backend", rb.backend, "Backend file or 'noiseless'")->capture_default_str();
  ro->add_option("--layers", rb.layers, "Layer count")->capture_default_str();
  ro->add_option("--N", rb.n, "Reference runs when building the curve");
  ro->add_option("--M", rb.m, "Scoring runs per repeat");
  ro->add_option("--repeats", rb.repeats, "Independent H-Scores (>= 10)");
  ro->add_option("--curve", rb.curve, "Use this curve file instead of the cache");
  ro->add_flag("--mitigate", rb.mitigate, "Invert readout confusion before scoring");
  ro->add_flag("--fixed-seed", rb.fixed_seed, "Reuse the same seeds in every repeat");
  ro->callback([&] { action = [&] { return cmd_robustness(common, rb); }; });

  ReportArgs rp;
  auto* re = app.add_subcommand("report", "Render SVG/CSV charts from a results directory");
  add_common(re, common);
  re->add_option("--results", rp.results, "Results directory (default: output root)");
  re->callback([&] { action = [&] { return cmd_report(common, rp); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    rc = action();
  } catch (const ScoringContextError& e) {
    std::cerr << "scoring context error: " << e.what() << "\n";
    return kExitContext;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::out_of_range& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return rc;
}

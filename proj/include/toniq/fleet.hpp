#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "toniq/backend.hpp"
#include "toniq/errors.hpp"
#include "toniq/parallel.hpp"
#include "toniq/qaoa.hpp"
#include "toniq/random.hpp"
#include "toniq/scoring.hpp"

namespace toniq {

struct RankEntry {
  std::string backend_name;
  double h_score = 0.0;
};

struct FleetWarning {
  std::string backend_name;
  std::string message;
};

struct FleetRanking {
  std::vector<RankEntry> entries;  // h_score descending, ties by name
  std::vector<FleetWarning> excluded;
  std::string instance_id;
  std::size_t n_layers = 0;
};

enum class Strategy { RankedTopK, RandomK, WorstK };

inline const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::RankedTopK: return "ranked_top_k";
    case Strategy::RandomK: return "random_k";
    case Strategy::WorstK: return "worst_k";
  }
  return "?";
}

inline Strategy parse_strategy(const std::string& s) {
  if (s == "ranked_top_k") return Strategy::RankedTopK;
  if (s == "random_k") return Strategy::RandomK;
  if (s == "worst_k") return Strategy::WorstK;
  throw ValidationError("unknown strategy '" + s + "'");
}

inline constexpr std::size_t kDefaultSelectionTrials = 200;
inline constexpr const char* kPoolingScheme = "round_robin";

struct SelectionOutcome {
  Strategy strategy = Strategy::RankedTopK;
  /// For random_k, the set drawn in the first trial.
  std::vector<std::string> chosen;
  HScoreReport pooled_report;
  std::size_t trials = 0;
  double trial_mean = 0.0;
  double trial_std = 0.0;
  std::vector<double> trial_scores;
  std::string pooling = kPoolingScheme;
};

/// Accuracy of scoring run i on every backend, run i using seed
/// derive_seed(master_seed, kScoring, i) everywhere. Rankings and pooled
/// selections read from the same grid, so they share seeds.
class FleetGrid {
 public:
  FleetGrid(const std::vector<BackendModel>& backends, const QuboInstance& inst,
            std::size_t n_layers, std::size_t m_runs, std::uint64_t master_seed,
            const SamplingOptions& opt = {})
      : inst_(&inst), n_layers_(n_layers), m_runs_(m_runs), master_seed_(master_seed),
        failure_budget_(opt.failure_budget) {
    if (backends.empty()) throw ValidationError("fleet must contain at least one backend");
    if (m_runs == 0) throw ValidationError("M must be >= 1");
    std::set<std::string> names;
    for (const auto& b : backends) {
      if (!names.insert(b.name).second) throw ValidationError("duplicate backend name '" + b.name + "'");
      names_.push_back(b.name);
    }
    std::vector<QaoaEvaluator> evals;
    evals.reserve(backends.size());
    for (const auto& b : backends) evals.emplace_back(inst, b, n_layers, opt.run);

    const std::size_t nb = backends.size();
    acc_.assign(nb * m_runs, 0.0);
    failed_.assign(nb * m_runs, 0);
    parallel_for(nb * m_runs, opt.jobs, [&](std::size_t k) {
      const std::size_t b = k / m_runs;
      const std::size_t i = k % m_runs;
      try {
        acc_[k] = run_once(evals[b], n_layers, opt.optimizer,
                           derive_seed(master_seed, SeedStream::kScoring, i), opt.run)
                      .accuracy;
      } catch (const RunError&) {
        failed_[k] = 1;
      }
    });
  }

  std::size_t size() const noexcept { return names_.size(); }
  std::size_t runs() const noexcept { return m_runs_; }
  const std::vector<std::string>& names() const noexcept { return names_; }

  std::size_t index_of(const std::string& name) const {
    const auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw ValidationError("backend '" + name + "' is not in the fleet");
    return static_cast<std::size_t>(it - names_.begin());
  }

  /// Run i goes to chosen[i % k], with `chosen` sorted by name.
  AccuracySamples pooled_samples(std::vector<std::string> chosen) const {
    std::sort(chosen.begin(), chosen.end());
    std::vector<std::size_t> idx;
    for (const auto& c : chosen) idx.push_back(index_of(c));
    std::vector<RunRecord> runs(m_runs_);
    for (std::size_t i = 0; i < m_runs_; ++i) {
      const std::size_t k = idx[i % idx.size()] * m_runs_ + i;
      runs[i].index = i;
      runs[i].failed = failed_[k] != 0;
      runs[i].result.accuracy = acc_[k];
    }
    std::string label = chosen.front();
    for (std::size_t j = 1; j < chosen.size(); ++j) label += "+" + chosen[j];
    return samples_from_runs(runs, *inst_, n_layers_, label, master_seed_, failure_budget_);
  }

  AccuracySamples samples(const std::string& name) const { return pooled_samples({name}); }

 private:
  const QuboInstance* inst_;
  std::size_t n_layers_;
  std::size_t m_runs_;
  std::uint64_t master_seed_;
  double failure_budget_;
  std::vector<std::string> names_;
  std::vector<double> acc_;
  std::vector<char> failed_;
};

inline void check_curve_context(const ScoringCurve& curve, const QuboInstance& inst,
                                std::size_t n_layers) {
  if (curve.instance_id != inst.id || curve.n_layers != n_layers) {
    throw ScoringContextError("curve is for (" + curve.instance_id + ", p=" +
                              std::to_string(curve.n_layers) + ") but the fleet runs (" + inst.id +
                              ", p=" + std::to_string(n_layers) + ")");
  }
}

inline FleetRanking rank_grid(const FleetGrid& grid, const ScoringCurve& curve,
                              const QuboInstance& inst, std::size_t n_layers) {
  check_curve_context(curve, inst, n_layers);
  FleetRanking r;
  r.instance_id = inst.id;
  r.n_layers = n_layers;
  for (const auto& name : grid.names()) {
    try {
      r.entries.push_back({name, h_score(grid.samples(name), curve).h_score});
    } catch (const BudgetError& e) {
      r.excluded.push_back({name, e.what()});
    }
  }
  std::sort(r.entries.begin(), r.entries.end(), [](const RankEntry& a, const RankEntry& b) {
    if (a.h_score != b.h_score) return a.h_score > b.h_score;
    return a.backend_name < b.backend_name;
  });
  return r;
}

/// H-Score of every backend from M runs each, best first. Backends whose
/// runs fail beyond the budget are excluded and listed as warnings.
inline FleetRanking rank_fleet(const std::vector<BackendModel>& backends, const QuboInstance& inst,
                               std::size_t n_layers, std::size_t m_runs, const ScoringCurve& curve,
                               std::uint64_t master_seed, const SamplingOptions& opt = {}) {
  check_curve_context(curve, inst, n_layers);
  const FleetGrid grid(backends, inst, n_layers, m_runs, master_seed, opt);
  return rank_grid(grid, curve, inst, n_layers);
}

struct SelectionConfig {
  Strategy strategy = Strategy::RankedTopK;
  std::size_t k = 1;
  std::size_t trials = kDefaultSelectionTrials;
  std::uint64_t seed = 0;
};

/// Pooled H-Score of a k-backend subset. ranked_top_k and worst_k follow
/// `ranking`; random_k draws `trials` uniform subsets of the ranked fleet.
inline SelectionOutcome select_from_grid(const FleetGrid& grid, const FleetRanking& ranking,
                                         const ScoringCurve& curve, const SelectionConfig& cfg) {
  const std::size_t fleet = ranking.entries.size();
  if (cfg.k < 1 || cfg.k > fleet) {
    throw ValidationError("k must be in [1, " + std::to_string(fleet) + "], got " +
                          std::to_string(cfg.k));
  }
  SelectionOutcome out;
  out.strategy = cfg.strategy;
  auto pooled = [&](const std::vector<std::string>& chosen) {
    return h_score(grid.pooled_samples(chosen), curve);
  };

  if (cfg.strategy == Strategy::RankedTopK || cfg.strategy == Strategy::WorstK) {
    const std::size_t first = cfg.strategy == Strategy::RankedTopK ? 0 : fleet - cfg.k;
    for (std::size_t j = first; j < first + cfg.k; ++j) out.chosen.push_back(ranking.entries[j].backend_name);
    std::sort(out.chosen.begin(), out.chosen.end());
    out.pooled_report = pooled(out.chosen);
    return out;
  }

  if (cfg.trials == 0) throw ValidationError("random_k needs at least one trial");
  std::vector<std::string> names;
  for (const auto& e : ranking.entries) names.push_back(e.backend_name);
  std::sort(names.begin(), names.end());
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    Rng rng(derive_seed(cfg.seed, SeedStream::kSelection, t));
    auto pool = names;
    for (std::size_t j = 0; j < cfg.k; ++j) {
      std::swap(pool[j], pool[j + rng.below(pool.size() - j)]);
    }
    std::vector<std::string> chosen(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(cfg.k));
    std::sort(chosen.begin(), chosen.end());
    auto report = pooled(chosen);
    out.trial_scores.push_back(report.h_score);
    if (t == 0) {
      out.chosen = chosen;
      out.pooled_report = std::move(report);
    }
  }
  out.trials = cfg.trials;
  const double x0 = out.trial_scores.front();
  double shift = 0.0;
  for (double s : out.trial_scores) shift += s - x0;
  const double mean = x0 + shift / static_cast<double>(cfg.trials);
  double ss = 0.0;
  for (double s : out.trial_scores) ss += (s - mean) * (s - mean);
  out.trial_mean = mean;
  out.trial_std = cfg.trials > 1 ? std::sqrt(ss / static_cast<double>(cfg.trials - 1)) : 0.0;
  return out;
}

inline SelectionOutcome select_and_pool(const std::vector<BackendModel>& backends,
                                        const QuboInstance& inst, std::size_t n_layers,
                                        std::size_t m_runs, const ScoringCurve& curve,
                                        const SelectionConfig& cfg, const SamplingOptions& opt = {}) {
  check_curve_context(curve, inst, n_layers);
  if (cfg.k < 1 || cfg.k > backends.size()) {
    throw ValidationError("k must be in [1, " + std::to_string(backends.size()) + "], got " +
                          std::to_string(cfg.k));
  }
  const FleetGrid grid(backends, inst, n_layers, m_runs, cfg.seed, opt);
  return select_from_grid(grid, rank_grid(grid, curve, inst, n_layers), curve, cfg);
}

}  // namespace toniq

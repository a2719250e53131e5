#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "toniq/backend.hpp"
#include "toniq/errors.hpp"
#include "toniq/parallel.hpp"
#include "toniq/qaoa.hpp"
#include "toniq/qubo.hpp"
#include "toniq/random.hpp"

namespace toniq {

inline constexpr std::size_t kDefaultReferenceRuns = 10000;  // N
inline constexpr std::size_t kDefaultScoringRuns = 1000;     // M
inline constexpr std::size_t kDefaultRepeats = 200;
inline constexpr std::size_t kMinReferenceRuns = 100;
inline constexpr std::size_t kMinRepeats = 10;

/// Tabulation resolution of scoring curves; well below the smoothing width.
inline constexpr std::size_t kDefaultBins = 10000;
/// Half-width of the window each reference sample is spread over.
inline constexpr double kDefaultSmoothing = 0.01;

struct AccuracySamples {
  std::vector<double> values;
  std::string instance_id;
  std::size_t n_layers = 0;
  std::string backend_name;
  std::uint64_t master_seed = 0;
  std::size_t failures = 0;
};

/// One QAOA run as recorded in per-run CSV output.
struct RunRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  QaoaRunResult result;
};

/// Empirical CDF of reference accuracies sampled on bin edges; evaluated by
/// linear interpolation.
struct ScoringCurve {
  std::vector<double> bin_edges;
  std::vector<double> cdf;
  std::size_t n_used = 0;
  std::string instance_id;
  std::size_t n_layers = 0;
  std::uint64_t master_seed = 0;
  std::size_t failures = 0;
  double smoothing = 0.0;

  std::size_t bins() const noexcept { return cdf.empty() ? 0 : cdf.size() - 1; }
};

struct RepeatStats {
  double mean = 0.0;
  double std = 0.0;
  double ci95_mean[2] = {0.0, 0.0};
  double ci95_std[2] = {0.0, 0.0};
  std::size_t repeats = 0;
  std::vector<double> scores;
};

struct HScoreReport {
  double h_score = 0.0;
  std::size_t m_used = 0;
  bool per_run_retained = false;
  std::vector<double> per_run_scores;
  std::optional<RepeatStats> repeat_stats;
  std::string instance_id;
  std::size_t n_layers = 0;
  std::string backend_name;
};

// ---------------------------------------------------------------------------
// Curves

inline void validate_curve(const ScoringCurve& c) {
  const std::size_t b = c.bins();
  if (b == 0 || c.bin_edges.size() != b + 1) throw ValidationError("curve edges/cdf size mismatch");
  if (c.bin_edges.front() != 0.0 || c.bin_edges.back() != 1.0) {
    throw ValidationError("curve edges must span [0, 1]");
  }
  if (c.cdf.front() != 0.0 || c.cdf.back() != 1.0) throw ValidationError("curve cdf must run 0 -> 1");
  for (std::size_t k = 0; k < b; ++k) {
    if (!(c.bin_edges[k] < c.bin_edges[k + 1])) throw ValidationError("curve edges must increase");
    if (c.cdf[k] > c.cdf[k + 1]) throw ValidationError("curve cdf must be non-decreasing");
  }
}

inline void check_accuracy(double x) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw ValidationError("accuracy " + std::to_string(x) + " outside [0, 1]");
  }
}

/// Empirical CDF of `values` tabulated on `bins` uniform bins of [0, 1].
/// With smoothing w > 0 each sample is spread uniformly over [x - w, x + w],
/// so the curve is continuous and a sample scored against its own reference
/// averages 1/2 even when accuracies cluster on a few values. The end points
/// are pinned to 0 and 1. With w = 0 the curve is a plain histogram (x = 1
/// falls in the last bin) cumulated and normalized.
inline ScoringCurve curve_from_samples(const std::vector<double>& values, std::string instance_id,
                                       std::size_t n_layers, std::size_t bins = kDefaultBins,
                                       std::uint64_t master_seed = 0,
                                       double smoothing = kDefaultSmoothing) {
  if (values.empty()) throw ValidationError("cannot build a scoring curve from zero samples");
  if (bins == 0) throw ValidationError("scoring curve needs at least one bin");
  if (!(smoothing >= 0.0 && smoothing <= 0.5)) throw ValidationError("curve smoothing must be in [0, 0.5]");
  for (double x : values) check_accuracy(x);

  ScoringCurve c;
  c.bin_edges.resize(bins + 1);
  c.cdf.resize(bins + 1);
  const double b = static_cast<double>(bins);
  const double n = static_cast<double>(values.size());
  for (std::size_t k = 0; k <= bins; ++k) c.bin_edges[k] = static_cast<double>(k) / b;

  if (smoothing == 0.0) {
    std::vector<std::size_t> counts(bins, 0);
    for (double x : values) ++counts[std::min(static_cast<std::size_t>(x * b), bins - 1)];
    std::size_t cum = 0;
    for (std::size_t k = 0; k <= bins; ++k) {
      c.cdf[k] = static_cast<double>(cum) / n;
      if (k < bins) cum += counts[k];
    }
  } else {
    // Edges at or past x + w take a full count via `above`; edges inside the
    // window take the ramp directly.
    std::vector<double> above(bins + 2, 0.0);
    std::vector<double> ramp(bins + 1, 0.0);
    for (double x : values) {
      const double lo = x - smoothing, hi = x + smoothing;
      const auto first = static_cast<std::size_t>(std::clamp(std::floor(lo * b), 0.0, b + 1.0));
      const auto full = static_cast<std::size_t>(std::clamp(std::ceil(hi * b), 0.0, b + 1.0));
      for (std::size_t k = first; k < full && k <= bins; ++k) {
        ramp[k] += std::clamp((c.bin_edges[k] - lo) / (2.0 * smoothing), 0.0, 1.0);
      }
      above[full] += 1.0;
    }
    double cum = 0.0;
    for (std::size_t k = 0; k <= bins; ++k) {
      cum += above[k];
      c.cdf[k] = std::min(1.0, (cum + ramp[k]) / n);
      if (k > 0) c.cdf[k] = std::max(c.cdf[k], c.cdf[k - 1]);
    }
    c.cdf.front() = 0.0;
    c.cdf.back() = 1.0;
  }
  c.n_used = values.size();
  c.instance_id = std::move(instance_id);
  c.n_layers = n_layers;
  c.master_seed = master_seed;
  c.smoothing = smoothing;
  return c;
}

inline ScoringCurve curve_from_samples(const AccuracySamples& s, std::size_t bins = kDefaultBins,
                                       double smoothing = kDefaultSmoothing) {
  auto c = curve_from_samples(s.values, s.instance_id, s.n_layers, bins, s.master_seed, smoothing);
  c.failures = s.failures;
  return c;
}

/// F(x), the score of one accuracy in [0, 1].
inline double evaluate_curve(const ScoringCurve& c, double x) {
  check_accuracy(x);
  const auto& e = c.bin_edges;
  const std::size_t b = c.bins();
  auto it = std::upper_bound(e.begin(), e.end(), x);
  std::size_t k = it == e.begin() ? 0 : static_cast<std::size_t>(it - e.begin()) - 1;
  k = std::min(k, b - 1);
  if (x == e[k]) return c.cdf[k];
  if (x == e[k + 1]) return c.cdf[k + 1];
  const double frac = (x - e[k]) / (e[k + 1] - e[k]);
  return std::clamp(c.cdf[k] + frac * (c.cdf[k + 1] - c.cdf[k]), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Sampling runs

struct SamplingOptions {
  OptimizerConfig optimizer{};
  RunOptions run{};
  unsigned jobs = 1;
  /// Fraction of runs allowed to fail before the batch is rejected.
  double failure_budget = 0.01;
};

/// `count` independent runs with seeds derived from (master_seed, stream, i).
/// Failed runs are recorded, never dropped silently.
inline std::vector<RunRecord> collect_runs(const QuboInstance& inst, const BackendModel& backend,
                                           std::size_t n_layers, std::size_t count,
                                           std::uint64_t master_seed, SeedStream stream,
                                           const SamplingOptions& opt = {}) {
  const QaoaEvaluator eval(inst, backend, n_layers, opt.run);
  std::vector<RunRecord> runs(count);
  parallel_for(count, opt.jobs, [&](std::size_t i) {
    auto& r = runs[i];
    r.index = i;
    r.seed = derive_seed(master_seed, stream, i);
    try {
      r.result = run_once(eval, n_layers, opt.optimizer, r.seed, opt.run);
    } catch (const RunError& e) {
      r.failed = true;
      r.error = e.what();
    }
  });
  return runs;
}

inline AccuracySamples samples_from_runs(const std::vector<RunRecord>& runs, const QuboInstance& inst,
                                         std::size_t n_layers, const std::string& backend_name,
                                         std::uint64_t master_seed, double failure_budget) {
  AccuracySamples s;
  s.instance_id = inst.id;
  s.n_layers = n_layers;
  s.backend_name = backend_name;
  s.master_seed = master_seed;
  for (const auto& r : runs) {
    if (r.failed) {
      ++s.failures;
    } else {
      s.values.push_back(r.result.accuracy);
    }
  }
  const auto allowed = static_cast<std::size_t>(failure_budget * static_cast<double>(runs.size()));
  if (s.failures > allowed) {
    throw BudgetError(std::to_string(s.failures) + " of " + std::to_string(runs.size()) +
                      " runs failed on backend '" + backend_name + "' (budget " +
                      std::to_string(allowed) + ")");
  }
  return s;
}

inline AccuracySamples collect_samples(const QuboInstance& inst, const BackendModel& backend,
                                       std::size_t n_layers, std::size_t count,
                                       std::uint64_t master_seed, SeedStream stream,
                                       const SamplingOptions& opt = {}) {
  const auto runs = collect_runs(inst, backend, n_layers, count, master_seed, stream, opt);
  return samples_from_runs(runs, inst, n_layers, backend.name, master_seed, opt.failure_budget);
}

/// Reference accuracies from N noiseless runs.
inline AccuracySamples reference_samples(const QuboInstance& inst, std::size_t n_layers,
                                         std::size_t n_runs, std::uint64_t master_seed,
                                         const SamplingOptions& opt = {}) {
  if (n_runs < kMinReferenceRuns) {
    throw ValidationError("reference needs N >= " + std::to_string(kMinReferenceRuns) +
                          ", got " + std::to_string(n_runs));
  }
  auto opt_ideal = opt;
  opt_ideal.run.mitigate_readout = false;
  return collect_samples(inst, ideal_backend(inst.n()), n_layers, n_runs, master_seed,
                         SeedStream::kReference, opt_ideal);
}

inline ScoringCurve build_reference(const QuboInstance& inst, std::size_t n_layers,
                                    std::size_t n_runs, std::uint64_t master_seed,
                                    const SamplingOptions& opt = {},
                                    std::size_t bins = kDefaultBins) {
  return curve_from_samples(reference_samples(inst, n_layers, n_runs, master_seed, opt), bins);
}

/// M scoring runs on `backend`, using seeds disjoint from the reference.
inline AccuracySamples scoring_samples(const QuboInstance& inst, const BackendModel& backend,
                                       std::size_t n_layers, std::size_t m_runs,
                                       std::uint64_t master_seed, const SamplingOptions& opt = {}) {
  if (m_runs == 0) throw ValidationError("M must be >= 1");
  return collect_samples(inst, backend, n_layers, m_runs, master_seed, SeedStream::kScoring, opt);
}

// ---------------------------------------------------------------------------
// H-Score

inline void check_context(const AccuracySamples& s, const ScoringCurve& c) {
  if (s.instance_id != c.instance_id || s.n_layers != c.n_layers) {
    throw ScoringContextError("curve is for (" + c.instance_id + ", p=" +
                              std::to_string(c.n_layers) + ") but samples are for (" +
                              s.instance_id + ", p=" + std::to_string(s.n_layers) + ")");
  }
}

/// C = (2/M) sum_i F(X_i), in [0, 2].
inline HScoreReport h_score(const AccuracySamples& samples, const ScoringCurve& curve,
                            bool retain_per_run = false) {
  check_context(samples, curve);
  if (samples.values.empty()) throw ValidationError("no samples to score");
  HScoreReport r;
  double sum = 0.0;
  for (double x : samples.values) {
    const double f = evaluate_curve(curve, x);
    sum += f;
    if (retain_per_run) r.per_run_scores.push_back(f);
  }
  r.m_used = samples.values.size();
  r.h_score = std::clamp(2.0 * sum / static_cast<double>(r.m_used), 0.0, 2.0);
  r.per_run_retained = retain_per_run;
  r.instance_id = samples.instance_id;
  r.n_layers = samples.n_layers;
  r.backend_name = samples.backend_name;
  return r;
}

/// 2 * mean over a of F_b(a_i), with F_b the curve built from b. Above 1, a
/// outperforms b.
inline double compare_distr(const AccuracySamples& a, const AccuracySamples& b,
                            std::size_t bins = kDefaultBins) {
  if (a.instance_id != b.instance_id || a.n_layers != b.n_layers) {
    throw ScoringContextError("compared samples come from different (instance, layers) contexts");
  }
  if (a.values.empty() || b.values.empty()) throw ValidationError("compare needs non-empty samples");
  const auto curve = curve_from_samples(b.values, b.instance_id, b.n_layers, bins);
  double sum = 0.0;
  for (double x : a.values) sum += evaluate_curve(curve, x);
  return 2.0 * sum / static_cast<double>(a.values.size());
}

// ---------------------------------------------------------------------------
// Robustness

/// Gaussian fit by sample mean and (n-1) standard deviation, with a normal
/// interval for the mean and chi-square bounds for the standard deviation.
inline RepeatStats fit_gaussian(const std::vector<double>& scores) {
  if (scores.size() < 2) throw ValidationError("Gaussian fit needs at least two scores");
  const double n = static_cast<double>(scores.size());
  // Shifted by the first score so identical scores give exactly zero spread.
  const double x0 = scores.front();
  double shift = 0.0;
  for (double s : scores) shift += s - x0;
  const double mean = x0 + shift / n;
  double ss = 0.0;
  for (double s : scores) ss += (s - mean) * (s - mean);
  const double sd = std::sqrt(ss / (n - 1.0));

  RepeatStats st;
  st.mean = mean;
  st.std = sd;
  st.repeats = scores.size();
  st.scores = scores;
  const double half = 1.96 * sd / std::sqrt(n);
  st.ci95_mean[0] = mean - half;
  st.ci95_mean[1] = mean + half;
  const boost::math::chi_squared chi(n - 1.0);
  st.ci95_std[0] = sd * std::sqrt((n - 1.0) / boost::math::quantile(chi, 0.975));
  st.ci95_std[1] = sd * std::sqrt((n - 1.0) / boost::math::quantile(chi, 0.025));
  return st;
}

struct RobustnessConfig {
  std::size_t repeats = kDefaultRepeats;
  std::size_t m_runs = kDefaultScoringRuns;
  std::uint64_t master_seed = 0;
  /// Reuse the same scoring seeds in every repeat (the spread is then 0).
  bool fixed_seed = false;
};

/// `repeats` independent H-Scores against one curve, summarized by a
/// Gaussian fit. The report's h_score is the fitted mean.
inline HScoreReport robustness(const QuboInstance& inst, const BackendModel& backend,
                               std::size_t n_layers, const ScoringCurve& curve,
                               const RobustnessConfig& cfg, const SamplingOptions& opt = {}) {
  if (cfg.repeats < kMinRepeats) {
    throw ValidationError("robustness needs >= " + std::to_string(kMinRepeats) + " repeats");
  }
  if (cfg.m_runs == 0) throw ValidationError("M must be >= 1");
  if (inst.id != curve.instance_id || n_layers != curve.n_layers) {
    throw ScoringContextError("curve does not match the robustness instance/layers");
  }
  const QaoaEvaluator eval(inst, backend, n_layers, opt.run);
  const std::size_t total = cfg.repeats * cfg.m_runs;
  std::vector<double> acc(total, 0.0);
  std::vector<char> failed(total, 0);
  parallel_for(total, opt.jobs, [&](std::size_t k) {
    const std::size_t rep = k / cfg.m_runs;
    const std::size_t i = k % cfg.m_runs;
    const std::uint64_t master = cfg.fixed_seed ? cfg.master_seed : derive_seed(cfg.master_seed, rep);
    try {
      acc[k] = run_once(eval, n_layers, opt.optimizer,
                        derive_seed(master, SeedStream::kRobustness, i), opt.run)
                   .accuracy;
    } catch (const RunError&) {
      failed[k] = 1;
    }
  });

  std::vector<double> scores;
  scores.reserve(cfg.repeats);
  std::size_t m_total = 0;
  for (std::size_t rep = 0; rep < cfg.repeats; ++rep) {
    std::vector<RunRecord> runs(cfg.m_runs);
    for (std::size_t i = 0; i < cfg.m_runs; ++i) {
      const std::size_t k = rep * cfg.m_runs + i;
      runs[i].failed = failed[k] != 0;
      runs[i].result.accuracy = acc[k];
    }
    const auto s = samples_from_runs(runs, inst, n_layers, backend.name, cfg.master_seed,
                                     opt.failure_budget);
    const auto r = h_score(s, curve);
    scores.push_back(r.h_score);
    m_total += r.m_used;
  }

  HScoreReport out;
  out.repeat_stats = fit_gaussian(scores);
  out.h_score = std::clamp(out.repeat_stats->mean, 0.0, 2.0);
  out.m_used = m_total;
  out.instance_id = inst.id;
  out.n_layers = n_layers;
  out.backend_name = backend.name;
  return out;
}

/// Same as above, building the N-run reference curve first.
inline HScoreReport robustness(const QuboInstance& inst, const BackendModel& backend,
                               std::size_t n_layers, std::size_t n_reference,
                               const RobustnessConfig& cfg, const SamplingOptions& opt = {}) {
  const auto curve = build_reference(inst, n_layers, n_reference, cfg.master_seed, opt);
  return robustness(inst, backend, n_layers, curve, cfg, opt);
}

}  // namespace toniq

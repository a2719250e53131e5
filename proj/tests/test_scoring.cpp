#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "toniq/builtin.hpp"
#include "toniq/random.hpp"
#include "toniq/scoring.hpp"

using namespace toniq;
using Catch::Approx;

namespace {

AccuracySamples make_samples(std::vector<double> v, std::string id = "inst", std::size_t layers = 1) {
  AccuracySamples s;
  s.values = std::move(v);
  s.instance_id = std::move(id);
  s.n_layers = layers;
  s.backend_name = "test";
  return s;
}

std::vector<double> uniform_values(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform();
  return v;
}

std::vector<double> beta_like(std::size_t n, Rng& rng) {
  // Skewed, continuous values in [0, 1].
  std::vector<double> v(n);
  for (auto& x : v) x = std::pow(rng.uniform(), 2.5);
  return v;
}

}  // namespace

TEST_CASE("curve invariants") {
  Rng rng(1);
  for (std::size_t bins : {std::size_t{1}, std::size_t{7}, std::size_t{100}, kDefaultBins}) {
    const auto c = curve_from_samples(beta_like(1000, rng), "i", 1, bins);
    CHECK_NOTHROW(validate_curve(c));
    CHECK(c.bins() == bins);
    CHECK(c.cdf.front() == 0.0);
    CHECK(c.cdf.back() == 1.0);
    CHECK(std::is_sorted(c.cdf.begin(), c.cdf.end()));
    CHECK(std::adjacent_find(c.bin_edges.begin(), c.bin_edges.end(), std::greater_equal<>()) == c.bin_edges.end());
    CHECK(evaluate_curve(c, 0.0) == 0.0);
    CHECK(evaluate_curve(c, 1.0) == 1.0);
  }
}

TEST_CASE("degenerate reference of all ones") {
  const auto c = curve_from_samples(std::vector<double>(500, 1.0), "i", 1, 100);
  for (std::size_t k = 0; k < 100; ++k) CHECK(c.cdf[k] == 0.0);
  CHECK(c.cdf[100] == 1.0);
  CHECK(evaluate_curve(c, 1.0) == 1.0);
  CHECK(evaluate_curve(c, 0.5) == 0.0);
}

TEST_CASE("smoothed curve matches the direct window formula") {
  Rng rng(11);
  const auto v = beta_like(500, rng);
  for (double w : {0.004, 0.01, 0.05}) {
    const auto c = curve_from_samples(v, "i", 1, 100, 0, w);
    CHECK(c.smoothing == w);
    for (std::size_t k = 1; k < 100; ++k) {
      const double e = static_cast<double>(k) / 100.0;
      double f = 0.0;
      for (double x : v) f += std::clamp((e - x + w) / (2.0 * w), 0.0, 1.0);
      CHECK(c.cdf[k] == Approx(f / 500.0).margin(1e-12));
    }
  }
  CHECK_THROWS_AS(curve_from_samples(v, "i", 1, 100, 0, -0.1), ValidationError);
}

TEST_CASE("plain histogram curve without smoothing") {
  const auto c = curve_from_samples({0.05, 0.15, 0.15, 1.0}, "i", 1, 10, 0, 0.0);
  CHECK(c.cdf[1] == 0.25);
  CHECK(c.cdf[2] == 0.75);
  CHECK(c.cdf[9] == 0.75);
  CHECK(c.cdf[10] == 1.0);
}

TEST_CASE("self-normalization holds for clustered accuracies") {
  // Accuracies concentrated on a few values, as exact noiseless runs produce.
  Rng rng(12);
  auto clustered = [&](std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) {
      const double u = rng.uniform();
      x = (u < 0.3 ? 0.12 : u < 0.7 ? 0.197 : 0.288) + 1e-4 * rng.uniform();
    }
    return v;
  };
  const auto curve = curve_from_samples(clustered(20000), "inst", 1);
  const double c = h_score(make_samples(clustered(20000)), curve).h_score;
  CHECK(std::abs(c - 1.0) <= 0.02);

  // A shift smaller than the cluster spacing still lowers the score.
  auto lower = clustered(20000);
  for (auto& x : lower) x -= 0.005;
  CHECK(h_score(make_samples(lower), curve).h_score < c - 0.1);
}

TEST_CASE("uniform reference gives an identity curve") {
  Rng rng(2);
  const auto c = curve_from_samples(uniform_values(200000, rng), "i", 1, 100);
  for (double x : {0.105, 0.333, 0.5, 0.777, 0.951}) CHECK(evaluate_curve(c, x) == Approx(x).margin(0.01));
}

TEST_CASE("curve at the sample median is about one half") {
  Rng rng(3);
  auto v = beta_like(10000, rng);
  const auto c = curve_from_samples(v, "i", 1);
  std::nth_element(v.begin(), v.begin() + 5000, v.end());
  const double f = evaluate_curve(c, v[5000]);
  CHECK(f >= 0.45);
  CHECK(f <= 0.55);
}

TEST_CASE("evaluate_curve rejects accuracies outside [0, 1]") {
  const auto c = curve_from_samples({0.2, 0.4}, "i", 1, 10);
  CHECK_THROWS_AS(evaluate_curve(c, -0.01), ValidationError);
  CHECK_THROWS_AS(evaluate_curve(c, 1.01), ValidationError);
  CHECK_THROWS_AS(evaluate_curve(c, std::nan("")), ValidationError);
  CHECK_THROWS_AS(curve_from_samples(std::vector<double>{}, "i", 1), ValidationError);
  CHECK_THROWS_AS(curve_from_samples({1.2}, "i", 1), ValidationError);
}

TEST_CASE("H-Score examples") {
  Rng rng(4);
  const auto curve = curve_from_samples(beta_like(5000, rng), "inst", 1);
  CHECK(h_score(make_samples(std::vector<double>(100, 1.0)), curve).h_score == 2.0);
  CHECK(h_score(make_samples(std::vector<double>(100, 0.0)), curve).h_score == 0.0);

  const auto r = h_score(make_samples({0.1, 0.5}), curve, true);
  CHECK(r.per_run_retained);
  CHECK(r.per_run_scores.size() == 2);
  CHECK(r.h_score == Approx(r.per_run_scores[0] + r.per_run_scores[1]));
  CHECK(r.m_used == 2);

  CHECK_THROWS_AS(h_score(make_samples({0.5}, "other"), curve), ScoringContextError);
  CHECK_THROWS_AS(h_score(make_samples({0.5}, "inst", 2), curve), ScoringContextError);
  CHECK_THROWS_AS(h_score(make_samples({}), curve), ValidationError);
}

TEST_CASE("self-normalization on continuous samples") {
  Rng rng(5);
  const auto curve = curve_from_samples(beta_like(5000, rng), "inst", 1);
  const double c = h_score(make_samples(beta_like(1000, rng)), curve).h_score;
  CHECK(std::abs(c - 1.0) <= 0.03);
}

TEST_CASE("H-Score bounds and monotone response") {
  Rng rng(6);
  for (int rep = 0; rep < 50; ++rep) {
    const auto curve = curve_from_samples(beta_like(300, rng), "inst", 1, 1 + rng.below(200));
    auto v = uniform_values(1 + rng.below(200), rng);
    const double c0 = h_score(make_samples(v), curve).h_score;
    CHECK(c0 >= 0.0);
    CHECK(c0 <= 2.0);
    const double shift = rng.uniform(0.0, 0.5);
    for (auto& x : v) x = std::min(1.0, x + shift);
    CHECK(h_score(make_samples(v), curve).h_score >= c0);
  }
}

TEST_CASE("compare_distr examples") {
  Rng rng(7);
  const auto s = make_samples(beta_like(5000, rng));
  CHECK(std::abs(compare_distr(s, s) - 1.0) <= 0.02);

  auto up = s;
  for (auto& x : up.values) x = std::min(1.0, x + 0.2);
  CHECK(compare_distr(up, s) > 1.0);
  CHECK(compare_distr(s, up) < 1.0);

  const auto zeros = make_samples(std::vector<double>(100, 0.0));
  const auto spread = make_samples(uniform_values(1000, rng));
  CHECK(compare_distr(zeros, spread) == Approx(0.0).margin(1e-12));

  CHECK_THROWS_AS(compare_distr(make_samples({0.1}, "a"), make_samples({0.1}, "b")), ScoringContextError);
  CHECK_THROWS_AS(compare_distr(make_samples({}), s), ValidationError);
}

TEST_CASE("Gaussian fit recovers synthetic scores") {
  Rng rng(8);
  std::vector<double> scores(200);
  for (auto& s : scores) s = 0.89 + 0.014 * rng.normal();
  const auto st = fit_gaussian(scores);
  CHECK(st.repeats == 200);
  CHECK(st.ci95_mean[0] <= 0.89);
  CHECK(0.89 <= st.ci95_mean[1]);
  CHECK(st.ci95_std[0] <= 0.014);
  CHECK(0.014 <= st.ci95_std[1]);
  CHECK(st.ci95_mean[1] - st.mean == Approx(1.96 * st.std / std::sqrt(200.0)));
  CHECK_THROWS_AS(fit_gaussian({1.0}), ValidationError);

  // Coverage of the intervals over many synthetic batches.
  int mean_hits = 0, std_hits = 0;
  const int trials = 400;
  for (int t = 0; t < trials; ++t) {
    for (auto& s : scores) s = 0.89 + 0.014 * rng.normal();
    const auto f = fit_gaussian(scores);
    mean_hits += f.ci95_mean[0] <= 0.89 && 0.89 <= f.ci95_mean[1];
    std_hits += f.ci95_std[0] <= 0.014 && 0.014 <= f.ci95_std[1];
  }
  CHECK(mean_hits >= 0.92 * trials);
  CHECK(std_hits >= 0.92 * trials);
}

TEST_CASE("reference and scoring runs") {
  const auto inst = builtin_instances(3);
  CHECK_THROWS_AS(build_reference(inst, 1, 99, 0), ValidationError);

  const auto a = reference_samples(inst, 1, 200, 11);
  const auto b = reference_samples(inst, 1, 200, 11);
  CHECK(a.values == b.values);
  CHECK(a.failures == 0);
  CHECK(a.backend_name == "noiseless");

  // Worker count does not change results.
  SamplingOptions par;
  par.jobs = 3;
  CHECK(reference_samples(inst, 1, 200, 11, par).values == a.values);

  // Scoring seeds are disjoint from reference seeds.
  const auto s = scoring_samples(inst, ideal_backend(3), 1, 200, 11);
  CHECK(s.values != a.values);

  const auto curve = curve_from_samples(a);
  CHECK(curve.n_used == 200);
  CHECK(curve.master_seed == 11);
  CHECK_THROWS_AS(scoring_samples(inst, ideal_backend(3), 1, 0, 11), ValidationError);
}

TEST_CASE("failure budget") {
  const auto inst = builtin_instances(3);
  std::vector<RunRecord> runs(200);
  for (std::size_t i = 0; i < runs.size(); ++i) runs[i].result.accuracy = 0.5;
  runs[3].failed = runs[9].failed = true;
  const auto ok = samples_from_runs(runs, inst, 1, "b", 0, 0.01);
  CHECK(ok.failures == 2);
  CHECK(ok.values.size() == 198);
  runs[10].failed = true;
  CHECK_THROWS_AS(samples_from_runs(runs, inst, 1, "b", 0, 0.01), BudgetError);
}

TEST_CASE("robustness") {
  const auto inst = builtin_instances(3);
  const auto curve = build_reference(inst, 1, 500, 3);
  RobustnessConfig cfg;
  cfg.repeats = 10;
  cfg.m_runs = 40;
  cfg.master_seed = 3;
  cfg.fixed_seed = true;
  const auto fixed = robustness(inst, ideal_backend(3), 1, curve, cfg);
  REQUIRE(fixed.repeat_stats);
  CHECK(fixed.repeat_stats->std == 0.0);
  CHECK(fixed.repeat_stats->repeats == 10);
  CHECK(fixed.m_used == 400);

  cfg.fixed_seed = false;
  const auto varied = robustness(inst, ideal_backend(3), 1, curve, cfg);
  CHECK(varied.repeat_stats->std > 0.0);
  CHECK(varied.h_score >= 0.0);
  CHECK(varied.h_score <= 2.0);

  cfg.repeats = 9;
  CHECK_THROWS_AS(robustness(inst, ideal_backend(3), 1, curve, cfg), ValidationError);
  cfg.repeats = 10;
  CHECK_THROWS_AS(robustness(inst, ideal_backend(3), 2, curve, cfg), ScoringContextError);
}

#include <catch_amalgamated.hpp>

#include <algorithm>

#include "toniq/builtin.hpp"
#include "toniq/fleet.hpp"

using namespace toniq;
using Catch::Approx;

namespace {

BackendModel graded(const std::string& name, double p2) {
  NoiseDefaults nd;
  nd.p1 = 0.0005;
  nd.p2 = p2;
  nd.t1 = 100;
  nd.t2 = 80;
  return line_backend(3, nd, name);
}

struct Fixture {
  QuboInstance inst = builtin_instances(3);
  ScoringCurve curve = build_reference(inst, 1, 1000, 5);
};

}  // namespace

TEST_CASE("single noiseless backend ranks near one") {
  Fixture f;
  const auto r = rank_fleet({ideal_backend(3, "ideal")}, f.inst, 1, 300, f.curve, 5);
  REQUIRE(r.entries.size() == 1);
  CHECK(r.entries[0].backend_name == "ideal");
  CHECK(r.entries[0].h_score == Approx(1.0).margin(0.1));
  CHECK(r.excluded.empty());
}

TEST_CASE("doubling two-qubit error ranks a backend lower") {
  Fixture f;
  const auto r = rank_fleet({graded("b_noisy", 0.04), graded("a_clean", 0.02)}, f.inst, 1, 200, f.curve, 5);
  REQUIRE(r.entries.size() == 2);
  CHECK(r.entries[0].backend_name == "a_clean");
  CHECK(r.entries[1].backend_name == "b_noisy");
  CHECK(r.entries[0].h_score > r.entries[1].h_score);
}

TEST_CASE("ranking ties break by name") {
  Fixture f;
  const auto r = rank_fleet({graded("zeta", 0.01), graded("alpha", 0.01)}, f.inst, 1, 50, f.curve, 5);
  CHECK(r.entries[0].backend_name == "alpha");
  CHECK(r.entries[0].h_score == r.entries[1].h_score);
}

TEST_CASE("fleet input validation") {
  Fixture f;
  CHECK_THROWS_AS(rank_fleet({}, f.inst, 1, 10, f.curve, 0), ValidationError);
  CHECK_THROWS_AS(rank_fleet({graded("x", 0.0), graded("x", 0.1)}, f.inst, 1, 10, f.curve, 0), ValidationError);
  CHECK_THROWS_AS(rank_fleet({graded("x", 0.0)}, f.inst, 2, 10, f.curve, 0), ScoringContextError);
  SelectionConfig cfg;
  cfg.k = 0;
  CHECK_THROWS_AS(select_and_pool({graded("x", 0.0)}, f.inst, 1, 10, f.curve, cfg), ValidationError);
  cfg.k = 2;
  CHECK_THROWS_AS(select_and_pool({graded("x", 0.0)}, f.inst, 1, 10, f.curve, cfg), ValidationError);
  CHECK_THROWS_AS(parse_strategy("best"), ValidationError);
}

TEST_CASE("pooled score of a one-backend fleet equals its own H-Score") {
  Fixture f;
  const auto b = graded("solo", 0.02);
  SelectionConfig cfg;
  cfg.k = 1;
  cfg.seed = 9;
  const auto out = select_and_pool({b}, f.inst, 1, 120, f.curve, cfg);
  const auto own = h_score(scoring_samples(f.inst, b, 1, 120, 9), f.curve);
  CHECK(out.pooled_report.h_score == own.h_score);
  CHECK(out.chosen == std::vector<std::string>{"solo"});
  CHECK(out.pooling == "round_robin");
}

TEST_CASE("k equal to fleet size makes strategies agree") {
  Fixture f;
  const std::vector<BackendModel> fleet{graded("a", 0.0), graded("b", 0.02), graded("c", 0.04)};
  std::vector<double> scores;
  for (auto s : {Strategy::RankedTopK, Strategy::RandomK, Strategy::WorstK}) {
    SelectionConfig cfg;
    cfg.k = 3;
    cfg.strategy = s;
    cfg.trials = 5;
    cfg.seed = 2;
    const auto out = select_and_pool(fleet, f.inst, 1, 90, f.curve, cfg);
    CHECK(out.chosen == std::vector<std::string>{"a", "b", "c"});
    scores.push_back(out.pooled_report.h_score);
    if (s == Strategy::RandomK) {
      CHECK(out.trials == 5);
      CHECK(out.trial_std == 0.0);
    }
  }
  CHECK(scores[0] == scores[1]);
  CHECK(scores[1] == scores[2]);
}

TEST_CASE("round-robin pooling assigns runs by sorted name") {
  Fixture f;
  const std::vector<BackendModel> fleet{graded("b", 0.05), graded("a", 0.0)};
  const FleetGrid grid(fleet, f.inst, 1, 10, 4);
  const auto pooled = grid.pooled_samples({"b", "a"});
  const auto sa = grid.samples("a");
  const auto sb = grid.samples("b");
  REQUIRE(pooled.values.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) CHECK(pooled.values[i] == (i % 2 == 0 ? sa.values[i] : sb.values[i]));
  CHECK(pooled.backend_name == "a+b");
}

TEST_CASE("selection is deterministic") {
  Fixture f;
  const std::vector<BackendModel> fleet{graded("a", 0.0), graded("b", 0.01), graded("c", 0.02), graded("d", 0.03)};
  SelectionConfig cfg;
  cfg.k = 2;
  cfg.strategy = Strategy::RandomK;
  cfg.trials = 20;
  cfg.seed = 77;
  const auto x = select_and_pool(fleet, f.inst, 1, 60, f.curve, cfg);
  const auto y = select_and_pool(fleet, f.inst, 1, 60, f.curve, cfg);
  CHECK(x.chosen == y.chosen);
  CHECK(x.trial_scores == y.trial_scores);
  CHECK(x.pooled_report.h_score == y.pooled_report.h_score);
  CHECK(x.chosen.size() == 2);
}

TEST_CASE("graded fleet ordering of strategies") {
  Fixture f;
  std::vector<BackendModel> fleet;
  for (int i = 0; i < 6; ++i) fleet.push_back(graded("q" + std::to_string(i), 0.006 * i));
  const FleetGrid grid(fleet, f.inst, 1, 150, 21);
  const auto ranking = rank_grid(grid, f.curve, f.inst, 1);
  REQUIRE(ranking.entries.size() == 6);
  // Neighbouring grades are within sampling noise at this M; the ends are not.
  auto position = [&](const std::string& name) {
    const auto it = std::find_if(ranking.entries.begin(), ranking.entries.end(),
                                 [&](const auto& e) { return e.backend_name == name; });
    return static_cast<std::size_t>(it - ranking.entries.begin());
  };
  CHECK(position("q0") < 3);
  CHECK(position("q5") >= 3);

  SelectionConfig cfg;
  cfg.k = 3;
  cfg.seed = 21;
  cfg.strategy = Strategy::RankedTopK;
  const auto top = select_from_grid(grid, ranking, f.curve, cfg);
  cfg.strategy = Strategy::WorstK;
  const auto worst = select_from_grid(grid, ranking, f.curve, cfg);
  cfg.strategy = Strategy::RandomK;
  const auto rnd = select_from_grid(grid, ranking, f.curve, cfg);
  std::vector<std::string> head, tail;
  for (std::size_t i = 0; i < 3; ++i) {
    head.push_back(ranking.entries[i].backend_name);
    tail.push_back(ranking.entries[3 + i].backend_name);
  }
  std::sort(head.begin(), head.end());
  std::sort(tail.begin(), tail.end());
  CHECK(top.chosen == head);
  CHECK(worst.chosen == tail);
  CHECK(rnd.trials == 200);
  CHECK(top.pooled_report.h_score > rnd.trial_mean + 0.01);
  CHECK(rnd.trial_mean > worst.pooled_report.h_score + 0.01);
}

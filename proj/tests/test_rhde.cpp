#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <deque>
#include <map>

#include "advsticker/errors.hpp"
#include "advsticker/rhde.hpp"
#include "advsticker/synthetic.hpp"
#include "doctest.h"
#include "hand_trace.hpp"

using namespace advsticker;
using advsticker::testing::HandTrace;
using advsticker::testing::ScriptedRng;

namespace {

QueryResult probs(double a, double b, double c) {
  return QueryResult({{"A", a}, {"B", b}, {"C", c}});
}

Individual individual(std::int64_t pos, double angle, double criterion) {
  Individual ind;
  ind.params = {pos, angle};
  ind.criterion = criterion;
  return ind;
}

Objective dodge(std::string gt = "A") { return {AttackMode::Dodging, std::move(gt), {}}; }

double adaptive(double a, double tau, double rho = 20.0) {
  return a - tau + rho * (1.0 - tau / a);
}

MaskMatrix face_mask() { return synthetic_face_mask(112, 112); }

struct BenchRun {
  AttackResult result;
  std::int64_t tallied = 0;
};

// A seeded synthetic landscape attacked through a tallied evaluator.
BenchRun bench(const ValidIndex& index, std::uint64_t land_seed, RhdeConfig cfg,
               std::optional<std::int64_t> budget = 5000,
               const LandscapeParams& params = {}) {
  const auto land = SyntheticLandscape::generate(land_seed, index, params);
  std::int64_t calls = 0;
  ScriptedEvaluator ev(
      [&](const ParamVector& t) {
        ++calls;
        return synthetic_score(land, index, t);
      },
      budget);
  BenchRun out;
  out.result = run_attack(cfg, dodge(land.ground_truth()), {index, ev});
  out.tallied = calls;
  return out;
}

}  // namespace

TEST_CASE("loss") {
  CHECK(loss(probs(0.9, 0.06, 0.04), dodge()) == 0.9);
  const Objective imp{AttackMode::Impersonation, "A", "B"};
  CHECK(loss(QueryResult({{"A", 0.7}, {"B", 0.3}}), imp) == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(loss(probs(0.9, 0.06, 0.04), {AttackMode::Impersonation, "A", "Z"}) == 1.0);

  SUBCASE("lower at a bump centre than far away") {
    const auto index = build_valid_index(face_mask());
    const auto land = SyntheticLandscape::generate(4, index, LandscapeParams::single_bump());
    const auto& b = land.bumps().front();
    const Objective o = dodge(land.ground_truth());
    PixelCoord far = index.coord(0);
    for (const auto& p : index.coords()) {
      if (std::hypot(p.row - b.center.row, p.col - b.center.col) >
          std::hypot(far.row - b.center.row, far.col - b.center.col))
        far = p;
    }
    CHECK(loss(land.score(b.center, b.phase), o) < loss(land.score(far, b.phase), o));
  }
}

TEST_CASE("objective") {
  CHECK(dodge().succeeded(probs(0.3, 0.5, 0.2)));
  CHECK_FALSE(dodge().succeeded(probs(0.5, 0.3, 0.2)));
  const Objective imp{AttackMode::Impersonation, "A", "C"};
  CHECK(imp.succeeded(probs(0.2, 0.3, 0.5)));
  CHECK_FALSE(imp.succeeded(probs(0.3, 0.5, 0.2)));
  CHECK_THROWS_AS((Objective{AttackMode::Impersonation, "A", "A"}.validate()), ConfigError);
  CHECK_THROWS_AS((Objective{AttackMode::Impersonation, "A", ""}.validate()), ConfigError);
  CHECK_THROWS_AS((Objective{AttackMode::Dodging, "", ""}.validate()), ConfigError);
  CHECK_NOTHROW(imp.validate());
}

TEST_CASE("compute_bound") {
  const QueryResult spread({{"A", 0.30}, {"B", 0.25}, {"C", 0.15}, {"D", 0.15}, {"E", 0.15}});
  CHECK(std::abs(compute_bound(spread) - 0.05) <= 1e-9);
  CHECK(compute_bound(QueryResult({{"A", 0.4}, {"B", 0.4}, {"C", 0.2}})) == 0.0);
  CHECK(compute_bound(QueryResult({{"A", 1.0}, {"B", 0.0}})) == 1.0);
  CHECK(compute_bound(QueryResult({{"A", 0.97}, {"B", 0.03}})) == doctest::Approx(0.94));
}

TEST_CASE("adaptive criterion") {
  CHECK(std::abs(adaptive_criterion(QueryResult({{"T", 0.4}, {"U", 0.2}, {"V", 0.4}}), "T", "U", 20) -
                 10.2) <= 1e-9);
  CHECK(adaptive_criterion(QueryResult({{"T", 0.3}, {"U", 0.3}, {"V", 0.4}}), "T", "U", 20) == 0.0);
  const double floored = adaptive_criterion(QueryResult({{"T", 0.0}, {"U", 0.5}, {"V", 0.5}}), "T", "U", 20);
  CHECK(std::isfinite(floored));
  CHECK(floored < -1e6);
  CHECK(std::abs(floored - (1e-6 - 0.5 + 20.0 * (1.0 - 0.5 / 1e-6))) <= 1e-9 * std::abs(floored));
}

TEST_CASE("evaluate_criterion by phase and mode") {
  const auto r = probs(0.4, 0.35, 0.25);
  EvolutionState plain;
  CHECK(evaluate_criterion(r, plain, dodge(), 20) == 0.4);
  EvolutionState adapt;
  adapt.flag = true;
  adapt.tau = "B";
  adapt.phase = Phase::Adaptive;
  CHECK(evaluate_criterion(r, adapt, dodge(), 20) == adaptive_criterion(r, "A", "B", 20));
  const Objective imp{AttackMode::Impersonation, "A", "C"};
  CHECK(evaluate_criterion(r, adapt, imp, 20) == doctest::Approx(0.75));
  CHECK(evaluate_criterion(r, plain, imp, 20) == doctest::Approx(0.75));
}

TEST_CASE("config validation and variants") {
  RhdeConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.inbred_count() == 60);
  c.inbreeding_ratio = 0.3;
  CHECK(c.inbred_count() == 36);
  c.inbreeding_ratio = 0.301;
  CHECK(c.inbred_count() == 37);
  c.variant = Variant::DE;
  CHECK(c.inbred_count() == 0);
  CHECK_FALSE(c.uses_adaptive());
  c.variant = Variant::AdaptiveDE;
  CHECK(c.uses_adaptive());
  CHECK_FALSE(c.uses_inbreeding());

  auto bad = [](auto mutate) {
    RhdeConfig b;
    mutate(b);
    return b;
  };
  CHECK_THROWS_AS(bad([](RhdeConfig& b) { b.population = 2; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](RhdeConfig& b) { b.generations = -1; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](RhdeConfig& b) { b.alpha = 0; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](RhdeConfig& b) { b.rho = -1; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](RhdeConfig& b) { b.delta = 10; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](RhdeConfig& b) { b.directions = 6; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](RhdeConfig& b) { b.step = 0; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](RhdeConfig& b) { b.inbreeding_ratio = 1.5; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](RhdeConfig& b) { b.angle = {10, -10}; }).validate(), ConfigError);

  CHECK(parse_variant("RHDE") == Variant::RHDE);
  CHECK(parse_variant("adaptive_de") == Variant::AdaptiveDE);
  CHECK(parse_variant("Region-DE") == Variant::RegionDE);
  CHECK(parse_variant("de") == Variant::DE);
  CHECK_THROWS_AS(parse_variant("ga"), ConfigError);
  for (auto v : {Variant::DE, Variant::AdaptiveDE, Variant::RegionDE, Variant::RHDE}) {
    CHECK(parse_variant(to_string(v)) == v);
  }
}

TEST_CASE("crossover candidate") {
  const ParamBounds bounds{{0, 99}, {-90, 90}};

  SUBCASE("arithmetic") {
    std::vector<Individual> pop{individual(10, 4, 0.1), individual(8, 2, 0.5), individual(4, 0, 0.7)};
    ScriptedRng rng({0, 0}, {});  // g1 = 1, g2 = 2
    CHECK(crossover_candidate(pop, rng, 0.5, bounds) == ParamVector{12, 5.0});
  }
  SUBCASE("best is found by criterion, not position") {
    std::vector<Individual> pop{individual(8, 2, 0.5), individual(4, 0, 0.7), individual(10, 4, 0.1)};
    ScriptedRng rng({0, 0}, {});  // g1 = 0, g2 = 1
    CHECK(crossover_candidate(pop, rng, 0.5, bounds) == ParamVector{12, 5.0});
  }
  SUBCASE("equal donors copy the best") {
    std::vector<Individual> pop{individual(10, 4, 0.1), individual(30, -7, 0.5), individual(30, -7, 0.7)};
    ScriptedRng rng({1, 0}, {});
    CHECK(crossover_candidate(pop, rng, 0.5, bounds) == ParamVector{10, 4.0});
  }
  SUBCASE("clipped to bounds") {
    std::vector<Individual> pop{individual(90, 80, 0.1), individual(99, 90, 0.5), individual(0, -90, 0.7)};
    ScriptedRng rng({0, 0}, {});
    CHECK(crossover_candidate(pop, rng, 0.5, bounds) == ParamVector{99, 90.0});
  }
  SUBCASE("too small") {
    std::vector<Individual> pop{individual(1, 0, 0), individual(2, 0, 1)};
    SeededRng rng(1);
    CHECK_THROWS_AS(crossover_candidate(pop, rng, 0.5, bounds), std::invalid_argument);
  }
  SUBCASE("donor pairs are uniform over distinct non-best indices") {
    // With alpha = 1 the offset x1 - x2 identifies the ordered donor pair.
    std::vector<Individual> pop{individual(1, 0, 0.5), individual(2, 0, 0.4), individual(500, 0, 0.0),
                                individual(4, 0, 0.6), individual(8, 0, 0.9)};
    const ParamBounds wide{{0, 1000}, {-90, 90}};
    std::map<std::int64_t, int> hist;
    SeededRng rng(77);
    constexpr int kDraws = 12000;
    for (int i = 0; i < kDraws; ++i) {
      const auto c = crossover_candidate(pop, rng, 1.0, wide);
      ++hist[c.position_index - 500];
    }
    CHECK(hist.size() == 12);
    CHECK(hist.count(0) == 0);
    double stat = 0.0;
    const double expected = kDraws / 12.0;
    for (const auto& [offset, n] : hist) stat += (n - expected) * (n - expected) / expected;
    CHECK(stat < boost::math::quantile(boost::math::chi_squared(11), 0.99));
  }
}

TEST_CASE("inbreed candidate") {
  const auto index = build_valid_index(MaskMatrix::filled(5, 5, true));
  auto pos = [&](int r, int c) { return *index.index_of({r, c}); };

  SUBCASE("loss strictly decreasing eastward picks E") {
    ScriptedEvaluator ev([&](const ParamVector& t) {
      const auto c = index.coord(t.position_index);
      const double a = 0.9 - 0.1 * c.col + 0.05 * std::abs(c.row - 2);
      return probs(a, 1.0 - a, 0.0);
    });
    EvolutionState st;
    st.visited = VisitedSet(index.size());
    Individual parent = individual(pos(2, 2), 15.0, 0.0);
    const auto r = inbreed_candidate(parent, {index, ev}, dodge(), 8, 1, st, 20);
    CHECK(index.coord(r.chosen.params.position_index) == PixelCoord{2, 3});
    CHECK(r.chosen.params.angle == 15.0);
    CHECK(r.evaluations == 8);
    CHECK(ev.queries() == 8);
    CHECK(st.visited.count() == 9);
    CHECK(st.visited.contains(pos(2, 2)));
  }
  SUBCASE("all neighbours equal picks N") {
    ScriptedEvaluator ev([](const ParamVector&) { return probs(0.8, 0.1, 0.1); });
    EvolutionState st;
    st.visited = VisitedSet(index.size());
    const auto r = inbreed_candidate(individual(pos(2, 2), 0, 0), {index, ev}, dodge(), 8, 1, st, 20);
    CHECK(index.coord(r.chosen.params.position_index) == PixelCoord{1, 2});
  }
  SUBCASE("corner parent searches its three valid directions only") {
    // From (0, 0) only E, SE and S stay on the grid; SE is the minimum.
    const std::map<PixelCoord, double> table{{{0, 1}, 0.7}, {{1, 1}, 0.6}, {{1, 0}, 0.65}};
    ScriptedEvaluator ev([&](const ParamVector& t) {
      const double a = table.at(index.coord(t.position_index));
      return probs(a, 1.0 - a, 0.0);
    });
    EvolutionState st;
    st.visited = VisitedSet(index.size());
    const auto r = inbreed_candidate(individual(pos(0, 0), 0, 0), {index, ev}, dodge(), 8, 1, st, 20);
    CHECK(index.coord(r.chosen.params.position_index) == PixelCoord{1, 1});
    CHECK(r.chosen.loss == 0.6);
    CHECK(r.evaluations == 3);
  }
  SUBCASE("four directions") {
    ScriptedEvaluator ev([&](const ParamVector& t) {
      const auto c = index.coord(t.position_index);
      const double a = 0.5 + 0.05 * c.row - 0.02 * c.col;
      return probs(a, 1.0 - a, 0.0);
    });
    EvolutionState st;
    st.visited = VisitedSet(index.size());
    const auto r = inbreed_candidate(individual(pos(2, 2), 0, 0), {index, ev}, dodge(), 4, 1, st, 20);
    CHECK(index.coord(r.chosen.params.position_index) == PixelCoord{1, 2});
    CHECK(r.evaluations == 4);
  }
  SUBCASE("stops on a successful neighbour") {
    ScriptedEvaluator ev([&](const ParamVector& t) {
      return index.coord(t.position_index) == PixelCoord{2, 3} ? probs(0.3, 0.6, 0.1)
                                                                : probs(0.8, 0.1, 0.1);
    });
    EvolutionState st;
    st.visited = VisitedSet(index.size());
    const auto r = inbreed_candidate(individual(pos(2, 2), 0, 0), {index, ev}, dodge(), 8, 1, st, 20);
    CHECK(r.success);
    CHECK(r.evaluations == 3);
  }
  SUBCASE("boxed in") {
    const auto single = build_valid_index(MaskMatrix::filled(1, 1, true));
    ScriptedEvaluator ev([](const ParamVector&) { return probs(0.8, 0.1, 0.1); });
    EvolutionState st;
    st.visited = VisitedSet(single.size());
    CHECK_THROWS_AS(inbreed_candidate(individual(0, 0, 0), {single, ev}, dodge(), 8, 1, st, 20),
                    NoValidNeighbor);
    CHECK(ev.queries() == 0);
  }
}

TEST_CASE("hand-traced three-individual run") {
  const auto run = HandTrace::run();
  const auto& result = run.result;
  CHECK(run.script_drained);
  CHECK(HandTrace::compare(result) == "");
  const std::int64_t calls = run.oracle_calls;

  using L = LoggedIndividual;
  const double j6 = adaptive(0.60, 0.30), j12 = adaptive(0.70, 0.20);
  const double j7 = adaptive(0.55, 0.35), j3 = adaptive(0.75, 0.15), j9 = adaptive(0.50, 0.42);
  const double j8 = adaptive(0.45, 0.44);
  // Frozen hand values of the adaptive criterion.
  CHECK(j6 == doctest::Approx(10.3).epsilon(1e-12));
  CHECK(j12 == doctest::Approx(14.785714285714286).epsilon(1e-12));
  CHECK(j9 == doctest::Approx(3.28).epsilon(1e-12));
  CHECK(j8 == doctest::Approx(0.45444444444444444).epsilon(1e-12));

  REQUIRE(result.log.size() == 2);
  const auto& g0 = result.log[0];
  // Sorted by loss: (6) 0.60, (12) 0.70, (18) 0.80.
  CHECK(g0.population == std::vector<L>{{{6, 20}, 0.60, 0.60}, {{12, 10}, 0.70, 0.70}, {{18, -20}, 0.80, 0.80}});
  // Slot 0 inbreeds (1,1): N=1 0.65, E=7 0.55, S=11 0.58, W=5 0.90 -> 7.
  // Slot 1: best 0, donors 1 and 2: 6 + 0.5 (12 - 18) = 3, 20 + 0.5 (10 + 20) = 35.
  // Slot 2: donors 2 and 1: 6 + 0.5 (18 - 12) = 9, 20 + 0.5 (-20 - 10) = 5.
  // Best candidate (9) has A on top with a gap of 0.08 <= 0.10: switch, tau = B.
  CHECK(g0.origins == std::vector<Origin>{Origin::Inbreeding, Origin::Crossover, Origin::Crossover});
  CHECK(g0.phase_switched);
  CHECK(g0.flag);
  CHECK(g0.tau == "B");
  REQUIRE(g0.candidates.size() == 3);
  CHECK(g0.candidates[0].params == ParamVector{7, 20});
  CHECK(g0.candidates[1].params == ParamVector{3, 35});
  CHECK(g0.candidates[2].params == ParamVector{9, 5});
  CHECK(g0.candidates[0].criterion == doctest::Approx(j7).epsilon(1e-12));
  CHECK(g0.candidates[1].criterion == doctest::Approx(j3).epsilon(1e-12));
  CHECK(g0.candidates[2].criterion == doctest::Approx(j9).epsilon(1e-12));
  // Under the new criterion: 7.47 <= 10.3 take, 16.6 > 14.79 keep, 3.28 <= 18.2 take.
  CHECK(g0.replaced == std::vector<bool>{true, false, true});
  REQUIRE(g0.next.size() == 3);
  CHECK(g0.next[0].params == ParamVector{7, 20});
  CHECK(g0.next[1].params == ParamVector{12, 10});
  CHECK(g0.next[2].params == ParamVector{9, 5});
  CHECK(g0.next[1].criterion == doctest::Approx(j12).epsilon(1e-12));
  CHECK(g0.queries == 3 + 4 + 2);

  const auto& g1 = result.log[1];
  // Sorted: (9) 3.28, (7) 7.47, (12) 14.79.
  REQUIRE(g1.population.size() == 3);
  CHECK(g1.population[0].params == ParamVector{9, 5});
  CHECK(g1.population[1].params == ParamVector{7, 20});
  CHECK(g1.population[2].params == ParamVector{12, 10});
  // Slot 0 inbreeds (1,4): N=4 0.60, E off-grid, S=14 0.52, W=8 0.45 -> 8.
  // Slot 1: donors 2 and 1: 9 + 0.5 (12 - 7) = 11.5 -> 12, 5 + 0.5 (10 - 20) = 0.
  // Slot 2: donors 1 and 2: 9 + 0.5 (7 - 12) = 6.5 -> 7, 5 + 0.5 (20 - 10) = 10.
  CHECK_FALSE(g1.phase_switched);
  CHECK(g1.flag);
  CHECK(g1.tau == "B");
  CHECK(g1.candidates[0].params == ParamVector{8, 5});
  CHECK(g1.candidates[1].params == ParamVector{12, 0});
  CHECK(g1.candidates[2].params == ParamVector{7, 10});
  CHECK(g1.candidates[0].criterion == doctest::Approx(j8).epsilon(1e-12));
  // 0.45 <= 3.28 take, 14.79 > 7.47 keep, 7.47 <= 14.79 take.
  CHECK(g1.replaced == std::vector<bool>{true, false, true});
  CHECK(g1.next[0].params == ParamVector{8, 5});
  CHECK(g1.next[1].params == ParamVector{7, 20});
  CHECK(g1.next[2].params == ParamVector{7, 10});
  CHECK(g1.queries == 9 + 3 + 2);

  CHECK(result.status == RunStatus::NotFound);
  CHECK_FALSE(result.success);
  CHECK(result.stop_path == StopPath::None);
  CHECK(result.best == ParamVector{8, 5});
  CHECK(result.best_criterion == doctest::Approx(j8).epsilon(1e-12));
  CHECK(result.generations == 2);
  CHECK(result.phase_switched);
  CHECK(result.tau == "B");
  CHECK(result.queries == 14);
  CHECK(calls == 14);
  CHECK(result.queries_per_generation == std::vector<std::int64_t>{3, 9, 14});
}

TEST_CASE("stopping rules") {
  const auto index = build_valid_index(MaskMatrix::filled(5, 5, true));

  SUBCASE("successful initial population stops before the first generation") {
    ScriptedEvaluator ev([](const ParamVector& t) {
      return t.position_index == 12 ? probs(0.2, 0.7, 0.1) : probs(0.8, 0.1, 0.1);
    });
    RhdeConfig cfg;
    cfg.population = 3;
    ScriptedRng rng({4, 12, 20}, {0.0, 0.0, 0.0});
    const auto r = run_attack(cfg, dodge(), {index, ev}, &rng);
    CHECK(r.success);
    CHECK(r.stop_path == StopPath::BestIndividual);
    CHECK(r.queries == 3);
    CHECK(r.generations == 0);
    CHECK(r.best == ParamVector{12, 0.0});
  }
  SUBCASE("a successful candidate stops the generation at once") {
    ScriptedEvaluator ev([&](const ParamVector& t) {
      return t.position_index == 13 ? probs(0.3, 0.6, 0.1) : probs(0.8, 0.1, 0.1);
    });
    RhdeConfig cfg;
    cfg.population = 3;
    cfg.variant = Variant::DE;
    cfg.alpha = 1.0;
    // Population 12, 2, 1 (all tied on loss, so order is kept). The first
    // crossover gives 12 + (2 - 1) = 13.
    ScriptedRng rng({12, 2, 1, 0, 0}, {0.0, 0.0, 0.0});
    const auto r = run_attack(cfg, dodge(), {index, ev}, &rng);
    CHECK(r.success);
    CHECK(r.stop_path == StopPath::Candidate);
    CHECK(r.queries == 4);
    CHECK(r.generations == 1);
    CHECK(r.best == ParamVector{13, 0.0});
  }
  SUBCASE("T = 0 returns the best initial individual") {
    ScriptedEvaluator ev([](const ParamVector& t) {
      const double a = 0.5 + 0.01 * t.position_index;
      return probs(a, 1 - a, 0.0);
    });
    RhdeConfig cfg;
    cfg.population = 4;
    cfg.generations = 0;
    ScriptedRng rng({9, 3, 17, 6}, {1.0, 2.0, 3.0, 4.0});
    const auto r = run_attack(cfg, dodge(), {index, ev}, &rng);
    CHECK(r.status == RunStatus::NotFound);
    CHECK(r.best == ParamVector{3, 2.0});
    CHECK(r.queries == 4);
    CHECK(r.generations == 0);
  }
  SUBCASE("budget exhaustion reports the queries spent") {
    ScriptedEvaluator ev([](const ParamVector&) { return probs(0.8, 0.1, 0.1); }, 50);
    RhdeConfig cfg;
    cfg.population = 10;
    cfg.seed = 3;
    const auto r = run_attack(cfg, dodge(), {index, ev});
    CHECK(r.status == RunStatus::BudgetExhausted);
    CHECK_FALSE(r.success);
    CHECK(r.queries == 50);
    CHECK(to_string(r.status) == "budget_exhausted");
  }
  SUBCASE("budget smaller than the population") {
    ScriptedEvaluator ev([](const ParamVector&) { return probs(0.8, 0.1, 0.1); }, 2);
    RhdeConfig cfg;
    cfg.population = 10;
    const auto r = run_attack(cfg, dodge(), {index, ev});
    CHECK(r.status == RunStatus::BudgetExhausted);
    CHECK(r.queries == 2);
  }
}

TEST_CASE("variants") {
  const auto index = build_valid_index(face_mask());

  SUBCASE("DE builds every candidate by crossover") {
    RhdeConfig cfg;
    cfg.variant = Variant::DE;
    cfg.population = 20;
    cfg.generations = 3;
    cfg.keep_log = true;
    cfg.seed = 5;
    const auto r = bench(index, 9, cfg).result;
    for (const auto& g : r.log) {
      for (auto o : g.origins) CHECK(o == Origin::Crossover);
      CHECK_FALSE(g.phase_switched);
    }
    CHECK_FALSE(r.phase_switched);
  }
  SUBCASE("region variants inbreed the leading slots") {
    RhdeConfig cfg;
    cfg.variant = Variant::RegionDE;
    cfg.population = 20;
    cfg.generations = 2;
    cfg.keep_log = true;
    cfg.seed = 5;
    const auto r = bench(index, 9, cfg).result;
    REQUIRE_FALSE(r.log.empty());
    const auto& g = r.log.front();
    for (std::size_t i = 0; i < g.origins.size(); ++i) {
      if (i >= 10) CHECK(g.origins[i] == Origin::Crossover);
    }
    CHECK(std::count(g.origins.begin(), g.origins.end(), Origin::Inbreeding) >= 1);
    CHECK_FALSE(r.phase_switched);
  }
  SUBCASE("lattice: RHDE without inbreeding or switching is DE") {
    for (std::uint64_t seed : {1, 2, 3, 4}) {
      RhdeConfig de;
      de.variant = Variant::DE;
      de.keep_log = true;
      de.seed = seed;
      de.population = 30;
      de.generations = 10;
      RhdeConfig rh = de;
      rh.variant = Variant::RHDE;
      rh.inbreeding_ratio = 0.0;
      rh.allow_phase_switch = false;
      const auto a = bench(index, seed + 100, de).result;
      const auto b = bench(index, seed + 100, rh).result;
      CHECK(a.best == b.best);
      CHECK(a.queries == b.queries);
      CHECK(a.status == b.status);
      REQUIRE(a.log.size() == b.log.size());
      for (std::size_t k = 0; k < a.log.size(); ++k) {
        CHECK(a.log[k].population == b.log[k].population);
        CHECK(a.log[k].candidates == b.log[k].candidates);
        CHECK(a.log[k].replaced == b.log[k].replaced);
      }
    }
  }
  SUBCASE("impersonation never switches the criterion") {
    const auto land = SyntheticLandscape::generate(21, index);
    ScriptedEvaluator ev([&](const ParamVector& t) { return synthetic_score(land, index, t); }, 3000);
    RhdeConfig cfg;
    cfg.seed = 4;
    cfg.keep_log = true;
    const Objective imp{AttackMode::Impersonation, land.ground_truth(), land.labels()[1]};
    const auto r = run_attack(cfg, imp, {index, ev});
    CHECK_FALSE(r.phase_switched);
    for (const auto& g : r.log) CHECK_FALSE(g.flag);
    if (r.success) CHECK(r.best_result.top1() == land.labels()[1]);
  }
}

TEST_CASE("determinism") {
  const auto index = build_valid_index(face_mask());
  RhdeConfig cfg;
  cfg.seed = 1234;
  cfg.keep_log = true;
  const auto a = bench(index, 55, cfg).result;
  const auto b = bench(index, 55, cfg).result;
  CHECK(a.best == b.best);
  CHECK(a.best_result == b.best_result);
  CHECK(a.queries == b.queries);
  CHECK(a.generations == b.generations);
  CHECK(a.stop_path == b.stop_path);
  CHECK(a.queries_per_generation == b.queries_per_generation);
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t k = 0; k < a.log.size(); ++k) {
    CHECK(a.log[k].population == b.log[k].population);
    CHECK(a.log[k].next == b.log[k].next);
  }
  cfg.seed = 1235;
  const auto c = bench(index, 55, cfg).result;
  CHECK((c.queries != a.queries || !(c.best == a.best)));
}

TEST_CASE("trace properties over seeded runs") {
  const auto index = build_valid_index(face_mask());
  const auto bounds = ParamBounds::for_index(index);
  int switched_runs = 0;
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    for (auto v : {Variant::DE, Variant::AdaptiveDE, Variant::RegionDE, Variant::RHDE}) {
      RhdeConfig cfg;
      cfg.variant = v;
      cfg.seed = seed;
      cfg.keep_log = true;
      cfg.inbreeding_ratio = 0.3;
      const auto run = bench(index, seed * 7 + 1, cfg);
      const auto& r = run.result;
      CHECK(run.tallied == r.queries);

      int switches = 0;
      double prev_best = std::numeric_limits<double>::infinity();
      std::int64_t expected_queries = cfg.population;
      for (const auto& g : r.log) {
        if (g.phase_switched) {
          ++switches;
          prev_best = std::numeric_limits<double>::infinity();
        }
        for (const auto* group : {&g.population, &g.candidates, &g.next}) {
          for (const auto& ind : *group) {
            CHECK(ind.params.position_index >= 0);
            CHECK(ind.params.position_index < index.size());
            CHECK(ind.params.angle >= bounds.angle.lower);
            CHECK(ind.params.angle <= bounds.angle.upper);
          }
        }
        if (g.next.size() == g.population.size() && !g.phase_switched) {
          double best = std::numeric_limits<double>::infinity();
          for (std::size_t i = 0; i < g.next.size(); ++i) {
            CHECK(g.next[i].criterion <= g.population[i].criterion);
            best = std::min(best, g.next[i].criterion);
          }
          CHECK(best <= prev_best);
          prev_best = best;
        }
        if (g.next.size() == g.population.size()) {
          expected_queries = g.queries;
        }
      }
      CHECK(switches <= 1);
      if (switches) ++switched_runs;
      if (v == Variant::DE || v == Variant::RegionDE) CHECK(switches == 0);
      // Per-generation counts add up to the total.
      CHECK(r.queries_per_generation.front() == cfg.population);
      CHECK(r.queries_per_generation.back() == r.queries);
      CHECK(r.queries >= expected_queries);
    }
  }
  CHECK(switched_runs > 0);
}

TEST_CASE("crossover-only generations cost one query per candidate") {
  const auto index = build_valid_index(face_mask());
  RhdeConfig cfg;
  cfg.variant = Variant::DE;
  cfg.population = 40;
  cfg.generations = 5;
  cfg.seed = 9;
  const auto land = SyntheticLandscape::generate(3, index, LandscapeParams::single_bump(2.0, 0.5));
  ScriptedEvaluator ev([&](const ParamVector& t) { return synthetic_score(land, index, t); }, std::nullopt,
                       false);
  const auto r = run_attack(cfg, dodge(land.ground_truth()), {index, ev});
  REQUIRE(r.status == RunStatus::NotFound);
  CHECK(r.queries == 40 * 6);
  for (std::size_t k = 1; k < r.queries_per_generation.size(); ++k) {
    CHECK(r.queries_per_generation[k] - r.queries_per_generation[k - 1] == 40);
  }
}

TEST_CASE("single dominant bump is found inside its 3 sigma support") {
  const auto index = build_valid_index(face_mask());
  const auto params = LandscapeParams::single_bump();
  int inside = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto land = SyntheticLandscape::generate(derive_seed(seed, "single"), index, params);
    ScriptedEvaluator ev([&](const ParamVector& t) { return synthetic_score(land, index, t); }, 5000);
    RhdeConfig cfg;
    cfg.seed = derive_seed(seed, "run");
    const auto r = run_attack(cfg, dodge(land.ground_truth()), {index, ev});
    const auto& b = land.bumps().front();
    const auto p = index.coord(r.best.position_index);
    if (r.success && std::hypot(p.row - b.center.row, p.col - b.center.col) <= 3 * b.sigma) ++inside;
  }
  CHECK(inside >= 45);
}

TEST_CASE("image pipeline run renders the final composite") {
  const int n = 64;
  const auto mask = synthetic_face_mask(n, n);
  const auto index = build_valid_index(mask);
  const Image face = synthetic_face_image(n, n);
  const auto land = SyntheticLandscape::generate(8, index, LandscapeParams::single_bump(6.0, 1.4));
  LandscapeImageOracle model(land, face, index);
  TallyingOracle tally(model);
  CountingOracle counted(tally, 2000);
  const auto sticker = Sticker::solid(8, 5, 240, 240, 240);
  const auto surface = FaceSurface::ellipsoid(n, n, 10.0);
  ImageEvaluator ev(face, sticker, surface, index, counted);
  RhdeConfig cfg;
  cfg.population = 20;
  cfg.generations = 10;
  cfg.seed = 2;
  const auto r = run_attack(cfg, dodge(land.ground_truth()), {index, ev});
  CHECK(r.queries == tally.calls());
  CHECK(r.queries == counted.count());
  REQUIRE(r.final_image);
  CHECK(*r.final_image ==
        composite(face, sticker, surface, {index.coord(r.best.position_index), r.best.angle}));
}

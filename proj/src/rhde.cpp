#include "advsticker/rhde.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "advsticker/errors.hpp"

namespace advsticker {

void Objective::validate() const {
  if (ground_truth.empty()) throw ConfigError("objective: ground truth label is empty");
  if (mode == AttackMode::Impersonation) {
    if (target.empty()) throw ConfigError("impersonation needs a target label");
    if (target == ground_truth) {
      throw ConfigError("impersonation target equals the ground truth");
    }
  }
}

bool Objective::succeeded(const QueryResult& result) const {
  if (result.empty()) return false;
  if (mode == AttackMode::Dodging) return result.top1() != ground_truth;
  return result.top1() == target;
}

double loss(const QueryResult& result, const Objective& objective) {
  if (objective.mode == AttackMode::Dodging) return result.prob(objective.ground_truth);
  return 1.0 - result.prob(objective.target);
}

double compute_bound(const QueryResult& result) {
  return result.top1_prob() - result.top2_prob();
}

double adaptive_criterion(const QueryResult& result, std::string_view ground_truth,
                          std::string_view tau, double rho) {
  const double f_gt = std::max(result.prob(ground_truth), kProbabilityFloor);
  const double f_tau = result.prob(tau);
  return f_gt - f_tau + rho * (1.0 - f_tau / f_gt);
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::DE: return "de";
    case Variant::AdaptiveDE: return "adaptive-de";
    case Variant::RegionDE: return "region-de";
    case Variant::RHDE: return "rhde";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::replace(s.begin(), s.end(), '_', '-');
  if (s == "de") return Variant::DE;
  if (s == "adaptive-de") return Variant::AdaptiveDE;
  if (s == "region-de") return Variant::RegionDE;
  if (s == "rhde") return Variant::RHDE;
  throw ConfigError("unknown variant '" + std::string(name) + "'");
}

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Success: return "success";
    case RunStatus::NotFound: return "failure";
    case RunStatus::BudgetExhausted: return "budget_exhausted";
  }
  return "?";
}

std::string_view to_string(StopPath s) {
  switch (s) {
    case StopPath::None: return "none";
    case StopPath::Initial: return "initial";
    case StopPath::BestIndividual: return "best_individual";
    case StopPath::Candidate: return "candidate";
  }
  return "?";
}

void RhdeConfig::validate() const {
  // Three pairwise-distinct indices are all the crossover needs.
  if (population < 3) throw ConfigError("population must be >= 3");
  if (generations < 0) throw ConfigError("generations must be >= 0");
  if (!(alpha > 0.0)) throw ConfigError("alpha must be > 0");
  if (!(rho >= 0.0)) throw ConfigError("rho must be >= 0");
  if (!(delta >= 0.0 && delta <= 1.0)) {
    throw ConfigError("delta is a probability gap and must lie in [0, 1]");
  }
  if (directions != 4 && directions != 8) throw ConfigError("directions must be 4 or 8");
  if (step < 1) throw ConfigError("step must be >= 1");
  if (!(inbreeding_ratio >= 0.0 && inbreeding_ratio <= 1.0)) {
    throw ConfigError("inbreeding ratio must lie in [0, 1]");
  }
  if (!(angle.lower <= angle.upper)) throw ConfigError("angle bounds reversed");
}

int RhdeConfig::inbred_count() const {
  if (!uses_inbreeding()) return 0;
  // Guard against 0.5 * 120 landing a hair above 60.
  return std::min(population,
                  static_cast<int>(std::ceil(inbreeding_ratio * population - 1e-9)));
}

double evaluate_criterion(const QueryResult& result, const EvolutionState& state,
                          const Objective& objective, double rho) {
  if (state.phase == Phase::Adaptive && objective.mode == AttackMode::Dodging) {
    return adaptive_criterion(result, objective.ground_truth, state.tau, rho);
  }
  return loss(result, objective);
}

namespace {

Individual make_individual(const ParamVector& params, QueryResult result,
                           const EvolutionState& state, const Objective& objective,
                           double rho) {
  Individual ind;
  ind.params = params;
  ind.loss = loss(result, objective);
  ind.criterion = evaluate_criterion(result, state, objective, rho);
  ind.result = std::move(result);
  return ind;
}

std::vector<LoggedIndividual> logged(std::span<const Individual> xs) {
  std::vector<LoggedIndividual> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back({x.params, x.loss, x.criterion});
  return out;
}

std::size_t best_index(std::span<const Individual> population) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < population.size(); ++i) {
    if (population[i].criterion < population[best].criterion) best = i;
  }
  return best;
}

}  // namespace

ParamVector crossover_candidate(std::span<const Individual> population,
                                RandomSource& rng, double alpha,
                                const ParamBounds& bounds) {
  const auto n = static_cast<std::int64_t>(population.size());
  if (n < 3) throw std::invalid_argument("crossover needs at least 3 individuals");
  const auto best = static_cast<std::int64_t>(best_index(population));

  std::int64_t g1 = rng.uniform_int(0, n - 2);
  if (g1 >= best) ++g1;
  std::int64_t g2 = rng.uniform_int(0, n - 3);
  const std::int64_t lo = std::min(best, g1);
  const std::int64_t hi = std::max(best, g1);
  if (g2 >= lo) ++g2;
  if (g2 >= hi) ++g2;

  const ParamVector& xb = population[best].params;
  const ParamVector& x1 = population[g1].params;
  const ParamVector& x2 = population[g2].params;
  const RealParams mixed{
      static_cast<double>(xb.position_index) +
          alpha * static_cast<double>(x1.position_index - x2.position_index),
      xb.angle + alpha * (x1.angle - x2.angle)};
  return clip(mixed, bounds);
}

InbreedResult inbreed_candidate(const Individual& parent, AttackContext ctx,
                                const Objective& objective, int directions,
                                int step, EvolutionState& state, double rho,
                                bool stop_on_success) {
  state.visited.insert(parent.params.position_index);
  InbreedResult out;
  bool have = false;
  for (Direction d : neighbourhood(directions)) {
    ParamVector moved;
    try {
      moved = neighbor(parent.params, d, step, ctx.index, state.visited);
    } catch (const NoValidNeighbor&) {
      continue;
    }
    state.visited.insert(moved.position_index);
    Individual ind = make_individual(moved, ctx.evaluator.evaluate(moved), state,
                                     objective, rho);
    ++out.evaluations;
    if (stop_on_success && objective.succeeded(ind.result)) {
      out.chosen = std::move(ind);
      out.success = true;
      return out;
    }
    if (!have || ind.loss < out.chosen.loss) {
      out.chosen = std::move(ind);
      have = true;
    }
  }
  if (!have) throw NoValidNeighbor("every inbreeding direction is blocked");
  return out;
}

Rhde::Rhde(RhdeConfig config, Objective objective, AttackContext ctx,
           RandomSource* rng)
    : config_(std::move(config)), objective_(std::move(objective)), ctx_(ctx),
      seeded_(config_.seed), rng_(rng ? *rng : seeded_) {
  config_.validate();
  objective_.validate();
  bounds_ = ParamBounds::for_index(ctx_.index, config_.angle);
  state_.visited = VisitedSet(ctx_.index.size());
}

Individual Rhde::evaluate(const ParamVector& params) {
  return make_individual(params, ctx_.evaluator.evaluate(params), state_, objective_,
                         config_.rho);
}

void Rhde::sort_population() {
  std::stable_sort(population_.begin(), population_.end(),
                   [](const Individual& a, const Individual& b) {
                     return a.criterion < b.criterion;
                   });
}

void Rhde::switch_phase(const std::string& tau, std::vector<Individual>& candidates) {
  state_.flag = true;
  state_.tau = tau;
  state_.phase = Phase::Adaptive;
  for (auto* group : {&population_, &candidates}) {
    for (auto& ind : *group) {
      ind.criterion = evaluate_criterion(ind.result, state_, objective_, config_.rho);
    }
  }
}

AttackResult Rhde::finish(RunStatus status, StopPath path, const Individual& best) {
  result_.status = status;
  result_.success = status == RunStatus::Success;
  result_.stop_path = path;
  result_.best = best.params;
  result_.best_result = best.result;
  result_.best_criterion = best.criterion;
  result_.queries = ctx_.evaluator.queries();
  result_.phase_switched = state_.flag;
  result_.tau = state_.tau;
  if (static_cast<int>(result_.queries_per_generation.size()) <= result_.generations) {
    result_.queries_per_generation.push_back(result_.queries);
  }
  if (!population_.empty() || status == RunStatus::Success) {
    result_.final_image = ctx_.evaluator.render(best.params);
  }
  return std::move(result_);
}

AttackResult Rhde::run() {
  result_ = AttackResult{};
  const int pop_size = config_.population;
  const double rho = config_.rho;
  GenerationLog glog;

  auto first_success = [this]() -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < population_.size(); ++i) {
      if (objective_.succeeded(population_[i].result)) return i;
    }
    return std::nullopt;
  };

  try {
    population_.clear();
    for (int i = 0; i < pop_size; ++i) {
      population_.push_back(evaluate(sample_uniform(rng_, bounds_)));
    }
    result_.queries_per_generation.push_back(ctx_.evaluator.queries());

    for (int k = 0; k < config_.generations; ++k) {
      state_.generation = k;
      result_.generations = k;
      sort_population();
      if (auto hit = first_success()) {
        return finish(RunStatus::Success,
                      *hit == 0 ? StopPath::BestIndividual : StopPath::Initial,
                      population_[*hit]);
      }
      result_.generations = k + 1;

      glog = GenerationLog{};
      glog.generation = k;
      if (config_.keep_log) glog.population = logged(population_);

      std::vector<Individual> candidates;
      candidates.reserve(pop_size);
      auto stop_on = [&](const Individual& winner) {
        if (config_.keep_log) {
          glog.candidates = logged(candidates);
          glog.flag = state_.flag;
          glog.tau = state_.tau;
          glog.queries = ctx_.evaluator.queries();
          result_.log.push_back(glog);
        }
        return finish(RunStatus::Success, StopPath::Candidate, winner);
      };

      const int inbred = config_.inbred_count();
      for (int i = 0; i < pop_size; ++i) {
        if (i < inbred) {
          try {
            InbreedResult ib = inbreed_candidate(population_[i], ctx_, objective_,
                                                 config_.directions, config_.step,
                                                 state_, rho);
            candidates.push_back(std::move(ib.chosen));
            glog.origins.push_back(Origin::Inbreeding);
            if (ib.success) return stop_on(candidates.back());
            continue;
          } catch (const NoValidNeighbor&) {
            // Boxed-in parent: fall back to crossover for this slot.
          }
        }
        candidates.push_back(
            evaluate(crossover_candidate(population_, rng_, config_.alpha, bounds_)));
        glog.origins.push_back(Origin::Crossover);
        if (objective_.succeeded(candidates.back().result)) {
          return stop_on(candidates.back());
        }
      }

      if (config_.uses_adaptive() && objective_.mode == AttackMode::Dodging &&
          !state_.flag) {
        const Individual& best = candidates[best_index(candidates)];
        const QueryResult& r = best.result;
        if (r.scores().size() >= 2 && r.top1() == objective_.ground_truth &&
            compute_bound(r) <= config_.delta) {
          switch_phase(r.top2(), candidates);
          glog.phase_switched = true;
        }
      }

      std::vector<Individual> next;
      next.reserve(pop_size);
      for (int i = 0; i < pop_size; ++i) {
        const bool take = candidates[i].criterion <= population_[i].criterion;
        glog.replaced.push_back(take);
        next.push_back(take ? std::move(candidates[i]) : std::move(population_[i]));
      }
      if (config_.keep_log) {
        // Candidates were moved from; rebuild their records from the trace.
        glog.candidates.clear();
        for (int i = 0; i < pop_size; ++i) {
          const Individual& src = glog.replaced[i] ? next[i] : candidates[i];
          glog.candidates.push_back({src.params, src.loss, src.criterion});
        }
        glog.next = logged(next);
        glog.flag = state_.flag;
        glog.tau = state_.tau;
      }
      population_ = std::move(next);
      result_.queries_per_generation.push_back(ctx_.evaluator.queries());
      if (config_.keep_log) {
        glog.queries = result_.queries_per_generation.back();
        result_.log.push_back(std::move(glog));
      }
    }

    sort_population();
    if (auto hit = first_success()) {
      return finish(RunStatus::Success,
                    *hit == 0 ? StopPath::BestIndividual : StopPath::Initial,
                    population_[*hit]);
    }
    return finish(RunStatus::NotFound, StopPath::None, population_.front());
  } catch (const BudgetExhausted&) {
    sort_population();
    if (config_.keep_log && !glog.origins.empty()) {
      glog.flag = state_.flag;
      glog.tau = state_.tau;
      glog.queries = ctx_.evaluator.queries();
      result_.log.push_back(std::move(glog));
    }
    return finish(RunStatus::BudgetExhausted, StopPath::None,
                  population_.empty() ? Individual{} : population_.front());
  }
}

AttackResult run_attack(const RhdeConfig& config, const Objective& objective,
                        AttackContext ctx, RandomSource* rng) {
  return Rhde(config, objective, ctx, rng).run();
}

}  // namespace advsticker

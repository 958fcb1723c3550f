#ifndef ADVSTICKER_RHDE_HPP
#define ADVSTICKER_RHDE_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "advsticker/image.hpp"
#include "advsticker/oracle.hpp"
#include "advsticker/param_space.hpp"
#include "advsticker/rng.hpp"

namespace advsticker {

enum class AttackMode { Dodging, Impersonation };

struct Objective {
  AttackMode mode = AttackMode::Dodging;
  std::string ground_truth;
  std::string target;  // impersonation only

  // Throws ConfigError when labels are missing or target == ground truth.
  void validate() const;
  // Dodging: top-1 differs from the ground truth. Impersonation: top-1 is the
  // target.
  bool succeeded(const QueryResult& result) const;
};

// Dodging: f(x', t_hat). Impersonation: 1 - f(x', t*).
double loss(const QueryResult& result, const Objective& objective);

// Top-1 minus top-2 probability.
double compute_bound(const QueryResult& result);

inline constexpr double kProbabilityFloor = 1e-6;

// f_gt - f_tau + rho (1 - f_tau / f_gt), with f_gt floored at 1e-6.
double adaptive_criterion(const QueryResult& result, std::string_view ground_truth,
                          std::string_view tau, double rho);

enum class Variant { DE, AdaptiveDE, RegionDE, RHDE };

std::string_view to_string(Variant v);
// Accepts de, adaptive-de, region-de, rhde (case-insensitive).
Variant parse_variant(std::string_view name);

struct RhdeConfig {
  int population = 120;
  int generations = 30;
  double alpha = 0.5;
  double rho = 20.0;
  // Switching threshold on top-1 minus top-2 probability. 0.10 is the
  // published "10" read as percentage points.
  double delta = 0.10;
  int directions = 8;
  int step = 1;
  double inbreeding_ratio = 0.5;
  Variant variant = Variant::RHDE;
  std::uint64_t seed = 0;
  Range angle{-90.0, 90.0};
  // Lets an adaptive variant run with the criterion frozen.
  bool allow_phase_switch = true;
  bool keep_log = false;

  // Throws ConfigError.
  void validate() const;
  bool uses_inbreeding() const {
    return variant == Variant::RegionDE || variant == Variant::RHDE;
  }
  bool uses_adaptive() const {
    return allow_phase_switch &&
           (variant == Variant::AdaptiveDE || variant == Variant::RHDE);
  }
  // ceil(mu * P) for inbreeding variants, else 0.
  int inbred_count() const;
};

enum class Phase { Plain, Adaptive };

struct EvolutionState {
  int generation = 0;
  bool flag = false;
  std::string tau;
  Phase phase = Phase::Plain;
  VisitedSet visited;
};

// Plain phase: the loss. Adaptive phase (dodging only): adaptive_criterion.
double evaluate_criterion(const QueryResult& result, const EvolutionState& state,
                          const Objective& objective, double rho);

struct Individual {
  ParamVector params;
  QueryResult result;
  double loss = 0.0;
  double criterion = 0.0;
};

// Lightweight record of an individual in the generation log.
struct LoggedIndividual {
  ParamVector params;
  double loss = 0.0;
  double criterion = 0.0;

  friend bool operator==(const LoggedIndividual&, const LoggedIndividual&) = default;
};

enum class Origin { Crossover, Inbreeding };

struct GenerationLog {
  int generation = 0;
  std::vector<LoggedIndividual> population;  // X(k), sorted by criterion
  std::vector<LoggedIndividual> candidates;  // C(k), criterion after any switch
  std::vector<Origin> origins;
  std::vector<bool> replaced;                // candidate i entered X(k+1)
  std::vector<LoggedIndividual> next;        // X(k+1) before sorting
  bool phase_switched = false;
  bool flag = false;
  std::string tau;
  std::int64_t queries = 0;                  // cumulative, after generation
};

enum class RunStatus { Success, NotFound, BudgetExhausted };
enum class StopPath { None, Initial, BestIndividual, Candidate };

std::string_view to_string(RunStatus s);
std::string_view to_string(StopPath s);

struct AttackResult {
  ParamVector best;
  QueryResult best_result;
  double best_criterion = 0.0;
  bool success = false;
  RunStatus status = RunStatus::NotFound;
  StopPath stop_path = StopPath::None;
  std::int64_t queries = 0;
  int generations = 0;  // generations fully or partly executed
  bool phase_switched = false;
  std::string tau;
  // [0] initial population, then one entry per generation.
  std::vector<std::int64_t> queries_per_generation;
  std::vector<GenerationLog> log;  // filled when keep_log is set
  std::optional<Image> final_image;
};

struct AttackContext {
  const ValidIndex& index;
  Evaluator& evaluator;
};

// X_best + alpha (X_g1 - X_g2), clipped. g1 and g2 are uniform among indices
// other than the best one and each other: g1 = u or u + 1 for u drawn from
// [0, P - 2], g2 likewise from [0, P - 3] skipping both taken indices.
ParamVector crossover_candidate(std::span<const Individual> population,
                                RandomSource& rng, double alpha,
                                const ParamBounds& bounds);

struct InbreedResult {
  Individual chosen;
  int evaluations = 0;
  bool success = false;  // stopped early on a successful neighbour
};

// Evaluates the loss at the parent's r neighbours and keeps the argmin
// (lowest direction wins ties). Evaluated positions, and the parent's, are
// marked visited. With `stop_on_success`, returns the first neighbour that
// already fools the model. Throws NoValidNeighbor when no direction works.
InbreedResult inbreed_candidate(const Individual& parent, AttackContext ctx,
                                const Objective& objective, int directions,
                                int step, EvolutionState& state, double rho,
                                bool stop_on_success = true);

class Rhde {
 public:
  // `rng` overrides the seeded generator; it must outlive the optimizer.
  Rhde(RhdeConfig config, Objective objective, AttackContext ctx,
       RandomSource* rng = nullptr);

  AttackResult run();

 private:
  Individual evaluate(const ParamVector& params);
  void sort_population();
  void switch_phase(const std::string& tau, std::vector<Individual>& candidates);
  AttackResult finish(RunStatus status, StopPath path, const Individual& best);

  RhdeConfig config_;
  Objective objective_;
  AttackContext ctx_;
  ParamBounds bounds_;
  SeededRng seeded_;
  RandomSource& rng_;
  EvolutionState state_;
  std::vector<Individual> population_;
  AttackResult result_;
};

AttackResult run_attack(const RhdeConfig& config, const Objective& objective,
                        AttackContext ctx, RandomSource* rng = nullptr);

}  // namespace advsticker

#endif  // ADVSTICKER_RHDE_HPP

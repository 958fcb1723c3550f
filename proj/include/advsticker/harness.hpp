#ifndef ADVSTICKER_HARNESS_HPP
#define ADVSTICKER_HARNESS_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "advsticker/geometry.hpp"
#include "advsticker/remote_oracle.hpp"
#include "advsticker/rhde.hpp"
#include "advsticker/synthetic.hpp"

namespace advsticker {

// Landscapes are seeded per image as derive_seed(batch seed, image id) and
// scored directly in parameter space over a synthetic face mask.
struct SyntheticOracleSpec {
  int face_size = 112;
  LandscapeParams landscape;
};

struct ImageSpec {
  std::string id;
  std::filesystem::path face;
  std::filesystem::path mask;
  std::filesystem::path surface;  // empty: flat surface
  std::string ground_truth;       // empty: the clean face's top-1
};

struct AttackConfig {
  RhdeConfig rhde;
  AttackMode mode = AttackMode::Dodging;
  std::string target;  // impersonation only
  std::optional<std::int64_t> budget = 5000;
  bool cache = true;

  std::optional<SyntheticOracleSpec> synthetic;
  std::optional<RemoteOptions> remote;

  std::filesystem::path sticker;  // empty: solid 16x10 sticker
  CompositeOptions composite;
  std::vector<ImageSpec> images;

  std::uint64_t batch_seed = 0;
  int count = 50;  // synthetic images when `images` is empty
  int workers = 1;

  double sweep_angle = 0.0;
  std::vector<Variant> ablation_variants{Variant::DE, Variant::AdaptiveDE,
                                         Variant::RegionDE, Variant::RHDE};
  // Per-run wall time makes the JSON report differ between runs.
  bool timing = false;

  // Throws ConfigError.
  void validate() const;
  // Image ids of the batch, in order.
  std::vector<std::string> image_ids() const;
};

// Relative paths resolve against `base_dir`. Throws ConfigError.
AttackConfig parse_config(std::string_view json_text,
                          const std::filesystem::path& base_dir = {});
AttackConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const AttackConfig& config);

// Seed of the optimizer for one image: derive_seed(batch seed, image id).
std::uint64_t run_seed(std::uint64_t batch_seed, const std::string& image_id);
// The synthetic landscape and mask of one image id.
SyntheticLandscape landscape_for(const AttackConfig& config, const std::string& image_id,
                                 const ValidIndex& index);
MaskMatrix synthetic_mask(const SyntheticOracleSpec& spec);

struct RunRecord {
  std::string image_id;
  Variant variant = Variant::RHDE;
  // success, failure, budget_exhausted or error
  std::string status;
  bool success = false;
  std::int64_t queries = 0;
  int generations = 0;
  std::int64_t position_index = 0;
  int row = 0;
  int col = 0;
  double angle = 0.0;
  std::string stop_path;
  bool phase_switched = false;
  std::string tau;
  std::string top1;
  std::uint64_t seed = 0;
  std::string error;
  std::optional<double> wall_ms;

  bool completed() const { return status != "error"; }
  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

struct VariantSummary {
  Variant variant = Variant::RHDE;
  int runs = 0;
  int completed = 0;
  int successes = 0;
  int errors = 0;
  std::optional<double> fooling_rate;  // successes / completed
  std::optional<double> nq_mean_success;
  std::optional<double> nq_median_success;
  std::optional<double> nq_mean_all;  // over completed runs
  std::optional<double> nq_median_all;

  friend bool operator==(const VariantSummary&, const VariantSummary&) = default;
};

struct AttackReport {
  std::uint64_t batch_seed = 0;
  std::optional<std::int64_t> budget;
  std::vector<RunRecord> runs;
  std::vector<std::string> excluded;  // not recognised correctly pre-attack
  std::vector<VariantSummary> summaries;

  friend bool operator==(const AttackReport&, const AttackReport&) = default;
};

std::vector<VariantSummary> summarize(const std::vector<RunRecord>& runs);
double median(std::vector<double> values);

// Runs one attack per eligible image with the configured variant. Per-run
// errors are recorded and the batch continues.
AttackReport run_batch(const AttackConfig& config);
// run_batch once per ablation variant, merged into one report.
AttackReport run_ablation(const AttackConfig& config);

// Full-fidelity run of a single image, keeping the generation log and final
// composite.
struct SingleRun {
  RunRecord record;
  AttackResult result;
};
SingleRun run_single(const AttackConfig& config, const std::string& image_id);

struct SweepCell {
  bool success = false;
  double f_gt = 0.0;
  double f_t = 0.0;

  friend bool operator==(const SweepCell&, const SweepCell&) = default;
};

struct RadialBin {
  int distance = 0;  // rounded Euclidean distance to o*
  int count = 0;
  double f_gt = 0.0;  // means over the bin
  double f_t = 0.0;

  friend bool operator==(const RadialBin&, const RadialBin&) = default;
};

struct SweepResult {
  int rows = 0;
  int cols = 0;
  double angle = 0.0;
  std::string ground_truth;
  std::string wrong_label;  // t
  std::int64_t queries = 0;
  std::vector<std::optional<SweepCell>> cells;  // row-major, valid cells only
  PixelCoord o_star;
  std::optional<double> cluster_metric;  // undefined without successes
  std::vector<RadialBin> radial;

  const std::optional<SweepCell>& at(int row, int col) const {
    return cells[static_cast<std::size_t>(row) * cols + col];
  }
};

// One evaluation per valid position at `angle`. The evaluator should have
// caching off so the query count equals |V|. t is the wrong label reaching
// the highest probability anywhere; o* maximises f_t.
SweepResult exhaustive_sweep(Evaluator& evaluator, const ValidIndex& index,
                             const std::string& ground_truth, double angle);
// Fraction of successful cells with a successful 8-neighbour.
std::optional<double> cluster_metric(const SweepResult& sweep);
std::vector<RadialBin> radial_profile(const SweepResult& sweep);

// Sweep of one configured image (synthetic or remote). The attack budget
// does not apply.
SweepResult run_sweep(const AttackConfig& config, const std::string& image_id);

// Writes report.json, report.csv (one row per run) and summary.csv (one row
// per variant) into `dir`.
void emit_report(const AttackReport& report, const std::filesystem::path& dir);
std::string report_to_json(const AttackReport& report);
AttackReport report_from_json(std::string_view text);
std::string report_to_csv(const AttackReport& report);
std::vector<RunRecord> runs_from_csv(std::string_view text);
std::string summary_to_csv(const AttackReport& report);

// Writes sweep.json, heatmap_success.csv, heatmap_f_gt.csv, heatmap_f_t.csv
// and radial.csv into `dir`.
void emit_sweep(const SweepResult& sweep, const std::filesystem::path& dir);
std::string sweep_to_json(const SweepResult& sweep);
enum class HeatmapField { Success, GroundTruth, Wrong };
// rows x cols matrix; invalid cells are empty.
std::string heatmap_csv(const SweepResult& sweep, HeatmapField field);

}  // namespace advsticker

#endif  // ADVSTICKER_HARNESS_HPP

// Command-line driver: single attacks, batches, the variant ablation,
// exhaustive sweeps, and a synthetic oracle served over HTTP.

#include <algorithm>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "advsticker/errors.hpp"
#include "advsticker/harness.hpp"
#include "advsticker/io.hpp"
#include "json.hpp"

using namespace advsticker;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kBudget = 3, kUnreachable = 4 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string variant;
  std::optional<std::int64_t> budget;
  std::string oracle_url;
  std::string out_dir = "out";
  std::optional<int> workers;
  std::string image;
  bool timing = false;
};

void add_common(CLI::App* app, Common& c, bool batch_flags) {
  app->add_option("--config", c.config, "JSON config file")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "batch seed");
  app->add_option("--variant", c.variant, "de, adaptive-de, region-de or rhde");
  app->add_option("--budget", c.budget, "query budget per run");
  app->add_option("--oracle-url", c.oracle_url, "remote oracle base URL");
  app->add_option("--out-dir", c.out_dir, "output directory");
  app->add_flag("--timing", c.timing, "record per-run wall time");
  if (batch_flags) {
    app->add_option("--workers", c.workers, "concurrent runs")->check(CLI::PositiveNumber);
  } else {
    app->add_option("--image", c.image, "image id (default: the first)");
  }
}

AttackConfig build_config(const Common& c) {
  AttackConfig cfg;
  if (!c.config.empty()) {
    cfg = load_config(c.config);
  } else {
    cfg.synthetic = SyntheticOracleSpec{};
  }
  if (c.seed) cfg.batch_seed = *c.seed;
  if (!c.variant.empty()) cfg.rhde.variant = parse_variant(c.variant);
  if (c.budget) cfg.budget = *c.budget;
  if (!c.oracle_url.empty()) {
    cfg.synthetic.reset();
    RemoteOptions opt = cfg.remote.value_or(RemoteOptions{});
    opt.url = c.oracle_url;
    cfg.remote = opt;
  }
  if (c.workers) cfg.workers = *c.workers;
  if (c.timing) cfg.timing = true;
  cfg.validate();
  return cfg;
}

std::string pick_image(const AttackConfig& cfg, const std::string& wanted) {
  if (!wanted.empty()) return wanted;
  const auto ids = cfg.image_ids();
  if (ids.empty()) throw ConfigError("no images configured");
  return ids.front();
}

void print_summary(const AttackReport& report) {
  for (const auto& s : report.summaries) {
    std::printf("%-12s runs=%d errors=%d FR=%s NQ(success) mean=%s median=%s\n",
                std::string(to_string(s.variant)).c_str(), s.runs, s.errors,
                s.fooling_rate ? std::to_string(*s.fooling_rate).c_str() : "null",
                s.nq_mean_success ? std::to_string(*s.nq_mean_success).c_str() : "null",
                s.nq_median_success ? std::to_string(*s.nq_median_success).c_str() : "null");
  }
  if (!report.excluded.empty()) {
    std::printf("excluded (misrecognised before attack): %zu\n", report.excluded.size());
  }
}

int batch_exit(const AttackReport& report) {
  const bool all_errors = !report.runs.empty() &&
                          std::none_of(report.runs.begin(), report.runs.end(),
                                       [](const RunRecord& r) { return r.completed(); });
  return all_errors ? kUnreachable : kOk;
}

int cmd_attack(const Common& c) {
  const AttackConfig cfg = build_config(c);
  const std::string id = pick_image(cfg, c.image);
  const SingleRun run = run_single(cfg, id);
  AttackReport report;
  report.batch_seed = cfg.batch_seed;
  report.budget = cfg.budget;
  report.runs = {run.record};
  report.summaries = summarize(report.runs);
  emit_report(report, c.out_dir);
  if (run.result.final_image) save_image(std::filesystem::path(c.out_dir) / "final.png", *run.result.final_image);

  nlohmann::json gens = nlohmann::json::array();
  for (const auto& g : run.result.log) {
    gens.push_back({{"generation", g.generation},
                    {"best_criterion", g.population.empty() ? 0.0 : g.population.front().criterion},
                    {"phase_switched", g.phase_switched},
                    {"flag", g.flag},
                    {"tau", g.tau},
                    {"queries", g.queries}});
  }
  write_text_file(std::filesystem::path(c.out_dir) / "generations.json", gens.dump(2) + "\n");

  const auto& r = run.record;
  std::printf("%s %s: %s after %lld queries, %d generations, position (%d, %d) angle %.3f\n",
              r.image_id.c_str(), std::string(to_string(r.variant)).c_str(), r.status.c_str(),
              static_cast<long long>(r.queries), r.generations, r.row, r.col, r.angle);
  return run.result.status == RunStatus::BudgetExhausted ? kBudget : kOk;
}

int cmd_batch(const Common& c, bool ablation) {
  const AttackConfig cfg = build_config(c);
  const AttackReport report = ablation ? run_ablation(cfg) : run_batch(cfg);
  emit_report(report, c.out_dir);
  write_text_file(std::filesystem::path(c.out_dir) / "config.json", config_to_json(cfg) + "\n");
  print_summary(report);
  return batch_exit(report);
}

int cmd_sweep(const Common& c, std::optional<double> angle) {
  AttackConfig cfg = build_config(c);
  if (angle) cfg.sweep_angle = *angle;
  const SweepResult sweep = run_sweep(cfg, pick_image(cfg, c.image));
  emit_sweep(sweep, c.out_dir);
  std::printf("swept %lld positions at %.1f deg; t=%s o*=(%d, %d) cluster=%s\n",
              static_cast<long long>(sweep.queries), sweep.angle, sweep.wrong_label.c_str(),
              sweep.o_star.row, sweep.o_star.col,
              sweep.cluster_metric ? std::to_string(*sweep.cluster_metric).c_str() : "null");
  return kOk;
}

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) { g_stop = 1; }

int cmd_serve(const Common& c, const std::string& host, int port) {
  Common local = c;
  local.oracle_url.clear();
  AttackConfig cfg = build_config(local);
  if (!cfg.synthetic) throw ConfigError("synth-oracle needs a synthetic oracle config");
  const std::string id = pick_image(cfg, c.image);
  const int size = cfg.synthetic->face_size;
  const MaskMatrix mask = synthetic_mask(*cfg.synthetic);
  ValidIndex index(mask);
  const SyntheticLandscape landscape = landscape_for(cfg, id, index);
  const Image face = synthetic_face_image(size, size);
  LandscapeImageOracle oracle(landscape, face, index);

  // Everything a remote client needs to attack this oracle.
  const std::filesystem::path dir = c.out_dir;
  std::filesystem::create_directories(dir);
  save_image(dir / "face.png", face);
  save_mask_png(dir / "mask.png", mask);
  save_surface_csv(dir / "surface.csv", FaceSurface::flat(size, size));
  save_image(dir / "sticker.png", Sticker::solid(16, 10, 240.0f, 240.0f, 240.0f).rgba());

  OracleServer server(oracle);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  const int bound = server.start(host, port);

  AttackConfig client = cfg;
  client.synthetic.reset();
  RemoteOptions opt;
  opt.url = "http://" + host + ":" + std::to_string(bound);
  client.remote = opt;
  client.sticker = std::filesystem::absolute(dir / "sticker.png");
  client.images = {ImageSpec{id, std::filesystem::absolute(dir / "face.png"),
                             std::filesystem::absolute(dir / "mask.png"),
                             std::filesystem::absolute(dir / "surface.csv"),
                             landscape.ground_truth()}};
  write_text_file(dir / "client.json", config_to_json(client) + "\n");

  std::printf("serving landscape %s on %s (client config: %s)\n", id.c_str(),
              opt.url.c_str(), (dir / "client.json").string().c_str());
  std::fflush(stdout);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial sticker attacks against query-only face recognition"};
  app.require_subcommand(1);

  Common attack_opts, batch_opts, ablation_opts, sweep_opts, serve_opts;
  auto* attack = app.add_subcommand("attack", "attack a single image");
  add_common(attack, attack_opts, false);
  auto* batch = app.add_subcommand("batch", "attack every configured image");
  add_common(batch, batch_opts, true);
  auto* ablation = app.add_subcommand("ablation", "batch once per optimizer variant");
  add_common(ablation, ablation_opts, true);
  auto* sweep = app.add_subcommand("sweep", "query every valid position at a fixed angle");
  add_common(sweep, sweep_opts, false);
  std::optional<double> sweep_angle;
  sweep->add_option("--angle", sweep_angle, "fixed sticker angle, degrees");

  auto* synth = app.add_subcommand("synth-oracle", "synthetic oracle tools");
  auto* serve = synth->add_subcommand("serve", "serve a synthetic landscape over HTTP");
  synth->require_subcommand(1);
  add_common(serve, serve_opts, false);
  std::string host = "127.0.0.1";
  int port = 8080;
  serve->add_option("--host", host, "bind address");
  serve->add_option("--port", port, "port, 0 for any free port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*attack) return cmd_attack(attack_opts);
    if (*batch) return cmd_batch(batch_opts, false);
    if (*ablation) return cmd_batch(ablation_opts, true);
    if (*sweep) return cmd_sweep(sweep_opts, sweep_angle);
    if (*serve) return cmd_serve(serve_opts, host, port);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const BudgetExhausted& e) {
    std::cerr << "budget exhausted: " << e.what() << '\n';
    return kBudget;
  } catch (const RemoteError& e) {
    std::cerr << "oracle unreachable: " << e.what() << '\n';
    return kUnreachable;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}

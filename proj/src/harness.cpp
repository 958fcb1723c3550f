#include "advsticker/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <set>
#include <thread>

#include "advsticker/errors.hpp"
#include "advsticker/io.hpp"
#include "json.hpp"

namespace advsticker {

using nlohmann::json;

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const json& v) {
  std::filesystem::path p = v.get<std::string>();
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

Range parse_range(const json& v) {
  if (!v.is_array() || v.size() != 2) throw ConfigError("expected a [min, max] pair");
  return {v[0].get<double>(), v[1].get<double>()};
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(),
                     [&](const char* k) { return key == k; })) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

void parse_rhde(const json& j, RhdeConfig& r) {
  check_keys(j, {"population", "generations", "alpha", "rho", "delta", "directions",
                 "step", "inbreeding_ratio", "variant", "angle", "phase_switch"},
             "rhde");
  r.population = j.value("population", r.population);
  r.generations = j.value("generations", r.generations);
  r.alpha = j.value("alpha", r.alpha);
  r.rho = j.value("rho", r.rho);
  r.delta = j.value("delta", r.delta);
  r.directions = j.value("directions", r.directions);
  r.step = j.value("step", r.step);
  r.inbreeding_ratio = j.value("inbreeding_ratio", r.inbreeding_ratio);
  if (j.contains("variant")) r.variant = parse_variant(j["variant"].get<std::string>());
  if (j.contains("angle")) r.angle = parse_range(j["angle"]);
  r.allow_phase_switch = j.value("phase_switch", r.allow_phase_switch);
}

SyntheticOracleSpec parse_synthetic(const json& j) {
  check_keys(j, {"face_size", "gallery_size", "margin", "base_spread", "angle",
                 "families"},
             "oracle.synthetic");
  SyntheticOracleSpec s;
  s.face_size = j.value("face_size", s.face_size);
  auto& l = s.landscape;
  l.gallery_size = j.value("gallery_size", l.gallery_size);
  l.margin = j.value("margin", l.margin);
  l.base_spread = j.value("base_spread", l.base_spread);
  if (j.contains("angle")) {
    const Range a = parse_range(j["angle"]);
    l.angle_min = a.lower;
    l.angle_max = a.upper;
  }
  if (j.contains("families")) {
    l.families.clear();
    for (const auto& f : j["families"]) {
      check_keys(f, {"count", "sigma", "amplitude", "pair_offset", "angle_sigma"},
                 "oracle.synthetic.families");
      BumpFamily fam;
      fam.count = f.value("count", fam.count);
      if (f.contains("sigma")) {
        const Range r = parse_range(f["sigma"]);
        fam.sigma_min = r.lower;
        fam.sigma_max = r.upper;
      }
      if (f.contains("amplitude")) {
        const Range r = parse_range(f["amplitude"]);
        fam.amplitude_min = r.lower;
        fam.amplitude_max = r.upper;
      }
      fam.pair_offset = f.value("pair_offset", fam.pair_offset);
      fam.angle_sigma = f.value("angle_sigma", fam.angle_sigma);
      l.families.push_back(fam);
    }
  }
  return s;
}

RemoteOptions parse_remote(const json& j) {
  check_keys(j, {"url", "top_k", "retries", "backoff_ms", "timeout_s"}, "oracle.remote");
  RemoteOptions o;
  o.url = j.at("url").get<std::string>();
  o.top_k = j.value("top_k", o.top_k);
  o.retries = j.value("retries", o.retries);
  o.backoff = std::chrono::milliseconds(j.value("backoff_ms", 100));
  o.timeout = std::chrono::seconds(j.value("timeout_s", 10));
  return o;
}

}  // namespace

AttackConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  AttackConfig cfg;
  try {
    const json doc = json::parse(json_text);
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    check_keys(doc, {"rhde", "objective", "budget", "cache", "oracle", "sticker",
                     "composite", "images", "batch", "sweep", "ablation", "timing"},
               "config");
    if (doc.contains("rhde")) parse_rhde(doc["rhde"], cfg.rhde);

    if (doc.contains("objective")) {
      const auto& o = doc["objective"];
      check_keys(o, {"mode", "target"}, "objective");
      const std::string mode = o.value("mode", "dodging");
      if (mode == "dodging") {
        cfg.mode = AttackMode::Dodging;
      } else if (mode == "impersonation") {
        cfg.mode = AttackMode::Impersonation;
      } else {
        throw ConfigError("objective.mode must be dodging or impersonation");
      }
      cfg.target = o.value("target", "");
    }
    if (doc.contains("budget")) {
      if (doc["budget"].is_null()) {
        cfg.budget.reset();
      } else {
        cfg.budget = doc["budget"].get<std::int64_t>();
      }
    }
    cfg.cache = doc.value("cache", cfg.cache);

    if (doc.contains("oracle")) {
      const auto& o = doc["oracle"];
      check_keys(o, {"synthetic", "remote"}, "oracle");
      if (o.contains("synthetic")) cfg.synthetic = parse_synthetic(o["synthetic"]);
      if (o.contains("remote")) cfg.remote = parse_remote(o["remote"]);
    }

    if (doc.contains("sticker")) cfg.sticker = resolve(base_dir, doc["sticker"]);
    if (doc.contains("composite")) {
      const auto& c = doc["composite"];
      check_keys(c, {"delta_s", "delta_y"}, "composite");
      if (c.contains("delta_s") && !c["delta_s"].is_null()) cfg.composite.delta_s = c["delta_s"].get<double>();
      if (c.contains("delta_y") && !c["delta_y"].is_null()) cfg.composite.delta_y = c["delta_y"].get<double>();
    }
    if (doc.contains("images")) {
      for (const auto& im : doc["images"]) {
        check_keys(im, {"id", "face", "mask", "surface", "ground_truth"}, "images[]");
        ImageSpec spec;
        spec.id = im.at("id").get<std::string>();
        if (im.contains("face")) spec.face = resolve(base_dir, im["face"]);
        if (im.contains("mask")) spec.mask = resolve(base_dir, im["mask"]);
        if (im.contains("surface")) spec.surface = resolve(base_dir, im["surface"]);
        spec.ground_truth = im.value("ground_truth", "");
        cfg.images.push_back(std::move(spec));
      }
    }
    if (doc.contains("batch")) {
      const auto& b = doc["batch"];
      check_keys(b, {"seed", "count", "workers"}, "batch");
      cfg.batch_seed = b.value("seed", cfg.batch_seed);
      cfg.count = b.value("count", cfg.count);
      cfg.workers = b.value("workers", cfg.workers);
    }
    if (doc.contains("sweep")) cfg.sweep_angle = doc["sweep"].value("angle", 0.0);
    if (doc.contains("ablation") && doc["ablation"].contains("variants")) {
      cfg.ablation_variants.clear();
      for (const auto& v : doc["ablation"]["variants"]) {
        cfg.ablation_variants.push_back(parse_variant(v.get<std::string>()));
      }
    }
    cfg.timing = doc.value("timing", cfg.timing);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

AttackConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return parse_config(text, path.parent_path());
}

void AttackConfig::validate() const {
  if (synthetic.has_value() == remote.has_value()) {
    throw ConfigError("exactly one oracle (synthetic or remote) must be configured");
  }
  rhde.validate();
  if (mode == AttackMode::Impersonation && target.empty()) {
    throw ConfigError("impersonation needs objective.target");
  }
  if (budget && *budget < 1) throw ConfigError("budget must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (count < 0) throw ConfigError("batch count must be >= 0");
  if (synthetic) {
    if (synthetic->face_size < 8) throw ConfigError("synthetic face_size must be >= 8");
    if (synthetic->landscape.gallery_size < 2) throw ConfigError("gallery_size must be >= 2");
    if (synthetic->landscape.families.empty()) throw ConfigError("no bump families");
  }
  if (remote && remote->url.empty()) throw ConfigError("remote oracle URL is empty");
  if (!sticker.empty() && !std::filesystem::exists(sticker)) {
    throw ConfigError("sticker not found: " + sticker.string());
  }
  std::set<std::string> ids;
  for (const auto& im : images) {
    if (im.id.empty()) throw ConfigError("image id is empty");
    if (!ids.insert(im.id).second) throw ConfigError("duplicate image id " + im.id);
    if (remote) {
      if (im.face.empty() || im.mask.empty()) {
        throw ConfigError("image " + im.id + " needs face and mask paths");
      }
    }
    for (const auto* p : {&im.face, &im.mask, &im.surface}) {
      if (!p->empty() && !std::filesystem::exists(*p)) {
        throw ConfigError("file not found: " + p->string());
      }
    }
  }
  if (ablation_variants.empty()) throw ConfigError("ablation needs at least one variant");
}

std::vector<std::string> AttackConfig::image_ids() const {
  std::vector<std::string> ids;
  if (!images.empty()) {
    for (const auto& im : images) ids.push_back(im.id);
  } else if (synthetic) {
    for (int i = 0; i < count; ++i) ids.push_back("img" + std::to_string(i));
  }
  return ids;
}

std::string config_to_json(const AttackConfig& c) {
  json doc;
  doc["rhde"] = {{"population", c.rhde.population},
                 {"generations", c.rhde.generations},
                 {"alpha", c.rhde.alpha},
                 {"rho", c.rhde.rho},
                 {"delta", c.rhde.delta},
                 {"directions", c.rhde.directions},
                 {"step", c.rhde.step},
                 {"inbreeding_ratio", c.rhde.inbreeding_ratio},
                 {"variant", std::string(to_string(c.rhde.variant))},
                 {"angle", {c.rhde.angle.lower, c.rhde.angle.upper}},
                 {"phase_switch", c.rhde.allow_phase_switch}};
  doc["objective"] = {
      {"mode", c.mode == AttackMode::Dodging ? "dodging" : "impersonation"}};
  if (!c.target.empty()) doc["objective"]["target"] = c.target;
  doc["budget"] = c.budget ? json(*c.budget) : json(nullptr);
  doc["cache"] = c.cache;
  if (c.synthetic) {
    const auto& l = c.synthetic->landscape;
    json fams = json::array();
    for (const auto& f : l.families) {
      fams.push_back({{"count", f.count},
                      {"sigma", {f.sigma_min, f.sigma_max}},
                      {"amplitude", {f.amplitude_min, f.amplitude_max}},
                      {"pair_offset", f.pair_offset},
                      {"angle_sigma", f.angle_sigma}});
    }
    doc["oracle"]["synthetic"] = {{"face_size", c.synthetic->face_size},
                                  {"gallery_size", l.gallery_size},
                                  {"margin", l.margin},
                                  {"base_spread", l.base_spread},
                                  {"angle", {l.angle_min, l.angle_max}},
                                  {"families", fams}};
  }
  if (c.remote) {
    doc["oracle"]["remote"] = {{"url", c.remote->url},
                               {"top_k", c.remote->top_k},
                               {"retries", c.remote->retries},
                               {"backoff_ms", c.remote->backoff.count()},
                               {"timeout_s", c.remote->timeout.count()}};
  }
  if (!c.sticker.empty()) doc["sticker"] = c.sticker.string();
  if (c.composite.delta_s) doc["composite"]["delta_s"] = *c.composite.delta_s;
  if (c.composite.delta_y) doc["composite"]["delta_y"] = *c.composite.delta_y;
  if (!c.images.empty()) {
    json ims = json::array();
    for (const auto& im : c.images) {
      json j{{"id", im.id}};
      if (!im.face.empty()) j["face"] = im.face.string();
      if (!im.mask.empty()) j["mask"] = im.mask.string();
      if (!im.surface.empty()) j["surface"] = im.surface.string();
      if (!im.ground_truth.empty()) j["ground_truth"] = im.ground_truth;
      ims.push_back(std::move(j));
    }
    doc["images"] = std::move(ims);
  }
  doc["batch"] = {{"seed", c.batch_seed}, {"count", c.count}, {"workers", c.workers}};
  doc["sweep"] = {{"angle", c.sweep_angle}};
  json vs = json::array();
  for (Variant v : c.ablation_variants) vs.push_back(std::string(to_string(v)));
  doc["ablation"] = {{"variants", vs}};
  doc["timing"] = c.timing;
  return doc.dump(2);
}

std::uint64_t run_seed(std::uint64_t batch_seed, const std::string& image_id) {
  return derive_seed(batch_seed, image_id);
}

MaskMatrix synthetic_mask(const SyntheticOracleSpec& spec) {
  return synthetic_face_mask(spec.face_size, spec.face_size);
}

SyntheticLandscape landscape_for(const AttackConfig& config, const std::string& image_id,
                                 const ValidIndex& index) {
  if (!config.synthetic) throw ConfigError("no synthetic oracle configured");
  const std::uint64_t seed = derive_seed(run_seed(config.batch_seed, image_id), "landscape");
  return SyntheticLandscape::generate(seed, index, config.synthetic->landscape);
}

namespace {

// Everything a run needs that is shared between variants of one image.
struct PreparedImage {
  std::string id;
  std::string ground_truth;
  bool eligible = false;
  std::string error;
  std::optional<SyntheticLandscape> landscape;
  Image face;
  std::optional<ValidIndex> index;
  FaceSurface surface;
};

struct BatchContext {
  const AttackConfig& config;
  std::optional<ValidIndex> synthetic_index;
  std::unique_ptr<RemoteOracle> remote;
  Sticker sticker;
};

Sticker default_sticker() { return Sticker::solid(16, 10, 240.0f, 240.0f, 240.0f); }

std::unique_ptr<BatchContext> make_context(const AttackConfig& config) {
  config.validate();
  auto ctx = std::make_unique<BatchContext>(BatchContext{config, std::nullopt, nullptr, {}});
  if (config.synthetic) {
    ctx->synthetic_index.emplace(synthetic_mask(*config.synthetic));
  } else {
    ctx->remote = std::make_unique<RemoteOracle>(*config.remote);
    ctx->sticker = config.sticker.empty() ? default_sticker() : load_sticker(config.sticker);
  }
  return ctx;
}

const ImageSpec* find_image(const AttackConfig& config, const std::string& id) {
  for (const auto& im : config.images) {
    if (im.id == id) return &im;
  }
  return nullptr;
}

// Loads inputs and checks the clean face is recognised. The check is not
// charged to any run.
PreparedImage prepare(BatchContext& ctx, const std::string& id) {
  PreparedImage p;
  p.id = id;
  try {
    if (ctx.synthetic_index) {
      p.landscape.emplace(landscape_for(ctx.config, id, *ctx.synthetic_index));
      p.ground_truth = p.landscape->ground_truth();
      p.eligible = p.landscape->no_attack().top1() == p.ground_truth;
      return p;
    }
    const ImageSpec* spec = find_image(ctx.config, id);
    if (!spec) throw ConfigError("unknown image id " + id);
    p.face = load_face(spec->face);
    p.index.emplace(load_mask(spec->mask));
    p.surface = spec->surface.empty() ? FaceSurface::flat(p.face.width(), p.face.height())
                                      : load_surface(spec->surface);
    const QueryResult clean = ctx.remote->query(p.face);
    p.ground_truth = spec->ground_truth.empty() ? clean.top1() : spec->ground_truth;
    p.eligible = clean.top1() == p.ground_truth;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    p.error = e.what();
  }
  return p;
}

RunRecord base_record(const AttackConfig& config, const PreparedImage& img, Variant v) {
  RunRecord rec;
  rec.image_id = img.id;
  rec.variant = v;
  rec.seed = run_seed(config.batch_seed, img.id);
  return rec;
}

void fill_record(RunRecord& rec, const AttackResult& r, const ValidIndex& index) {
  rec.status = std::string(to_string(r.status));
  rec.success = r.success;
  rec.queries = r.queries;
  rec.generations = r.generations;
  rec.position_index = r.best.position_index;
  if (index.size() > 0 && r.best.position_index >= 0 &&
      r.best.position_index < index.size()) {
    const PixelCoord pc = index.coord(r.best.position_index);
    rec.row = pc.row;
    rec.col = pc.col;
  }
  rec.angle = r.best.angle;
  rec.stop_path = std::string(to_string(r.stop_path));
  rec.phase_switched = r.phase_switched;
  rec.tau = r.tau;
  rec.top1 = r.best_result.empty() ? std::string() : r.best_result.top1();
}

// A single run keeps its generation log and lets errors propagate.
SingleRun execute(BatchContext& ctx, const PreparedImage& img, Variant v, bool single) {
  const AttackConfig& config = ctx.config;
  SingleRun out;
  out.record = base_record(config, img, v);
  if (!img.error.empty()) {
    out.record.status = "error";
    out.record.error = img.error;
    return out;
  }
  RhdeConfig rc = config.rhde;
  rc.variant = v;
  rc.seed = out.record.seed;
  rc.keep_log = single;
  const Objective objective{config.mode, img.ground_truth, config.target};

  const auto start = std::chrono::steady_clock::now();
  try {
    if (img.landscape) {
      LandscapeEvaluator ev(*img.landscape, *ctx.synthetic_index, config.budget, config.cache);
      out.result = run_attack(rc, objective, AttackContext{*ctx.synthetic_index, ev});
      fill_record(out.record, out.result, *ctx.synthetic_index);
    } else {
      CountingOracle counted(*ctx.remote, config.budget, config.cache);
      ImageEvaluator ev(img.face, ctx.sticker, img.surface, *img.index, counted,
                        config.composite);
      out.result = run_attack(rc, objective, AttackContext{*img.index, ev});
      fill_record(out.record, out.result, *img.index);
    }
  } catch (const std::exception& e) {
    if (single) throw;
    out.record.status = "error";
    out.record.error = e.what();
  }
  if (config.timing) {
    out.record.wall_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - start)
                             .count();
  }
  return out;
}

AttackReport run_variants(const AttackConfig& config, const std::vector<Variant>& variants) {
  auto ctx = make_context(config);
  AttackReport report;
  report.batch_seed = config.batch_seed;
  report.budget = config.budget;

  const auto ids = config.image_ids();
  std::vector<PreparedImage> images;
  images.reserve(ids.size());
  for (const auto& id : ids) images.push_back(prepare(*ctx, id));

  struct Job {
    const PreparedImage* image;
    Variant variant;
  };
  std::vector<Job> jobs;
  for (Variant v : variants) {
    for (const auto& img : images) {
      if (img.eligible || !img.error.empty()) jobs.push_back({&img, v});
    }
  }
  for (const auto& img : images) {
    if (!img.eligible && img.error.empty()) report.excluded.push_back(img.id);
  }

  std::vector<RunRecord> records(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      records[j] = execute(*ctx, *jobs[j].image, jobs[j].variant, false).record;
    }
  };
  const int n = std::min<int>(config.workers, static_cast<int>(jobs.size()));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  report.runs = std::move(records);
  report.summaries = summarize(report.runs);
  // Variants with no eligible image still get a row.
  for (Variant v : variants) {
    const bool present = std::any_of(report.summaries.begin(), report.summaries.end(),
                                      [&](const VariantSummary& s) { return s.variant == v; });
    if (!present) {
      VariantSummary empty;
      empty.variant = v;
      report.summaries.push_back(empty);
    }
  }
  std::stable_sort(report.summaries.begin(), report.summaries.end(),
                   [&](const VariantSummary& a, const VariantSummary& b) {
                     auto pos = [&](Variant v) {
                       return std::find(variants.begin(), variants.end(), v) - variants.begin();
                     };
                     return pos(a.variant) < pos(b.variant);
                   });
  return report;
}

}  // namespace

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of nothing");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<VariantSummary> summarize(const std::vector<RunRecord>& runs) {
  std::vector<VariantSummary> out;
  std::vector<std::vector<double>> nq_success, nq_all;
  for (const auto& r : runs) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const VariantSummary& s) { return s.variant == r.variant; });
    if (it == out.end()) {
      out.emplace_back();
      out.back().variant = r.variant;
      nq_success.emplace_back();
      nq_all.emplace_back();
      it = out.end() - 1;
    }
    const auto k = static_cast<std::size_t>(it - out.begin());
    ++it->runs;
    if (!r.completed()) {
      ++it->errors;
      continue;
    }
    ++it->completed;
    nq_all[k].push_back(static_cast<double>(r.queries));
    if (r.success) {
      ++it->successes;
      nq_success[k].push_back(static_cast<double>(r.queries));
    }
  }
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  for (std::size_t k = 0; k < out.size(); ++k) {
    auto& s = out[k];
    if (s.completed > 0) {
      s.fooling_rate = static_cast<double>(s.successes) / s.completed;
      s.nq_mean_all = mean(nq_all[k]);
      s.nq_median_all = median(nq_all[k]);
    }
    if (!nq_success[k].empty()) {
      s.nq_mean_success = mean(nq_success[k]);
      s.nq_median_success = median(nq_success[k]);
    }
  }
  return out;
}

AttackReport run_batch(const AttackConfig& config) {
  return run_variants(config, {config.rhde.variant});
}

AttackReport run_ablation(const AttackConfig& config) {
  return run_variants(config, config.ablation_variants);
}

SingleRun run_single(const AttackConfig& config, const std::string& image_id) {
  auto ctx = make_context(config);
  const PreparedImage img = prepare(*ctx, image_id);
  if (!img.error.empty()) throw RemoteError(img.error);
  if (!img.eligible) {
    throw ConfigError("image " + image_id + " is not recognised as " + img.ground_truth +
                      " before the attack");
  }
  return execute(*ctx, img, config.rhde.variant, true);
}

SweepResult exhaustive_sweep(Evaluator& evaluator, const ValidIndex& index,
                             const std::string& ground_truth, double angle) {
  const MaskMatrix& mask = index.mask();
  const std::int64_t before = evaluator.queries();
  std::vector<QueryResult> results;
  results.reserve(static_cast<std::size_t>(index.size()));
  for (std::int64_t i = 0; i < index.size(); ++i) {
    results.push_back(evaluator.evaluate(ParamVector{i, angle}));
  }

  SweepResult sweep;
  sweep.rows = mask.rows();
  sweep.cols = mask.cols();
  sweep.angle = angle;
  sweep.ground_truth = ground_truth;
  sweep.queries = evaluator.queries() - before;

  double best_wrong = -1.0;
  for (const auto& r : results) {
    for (const auto& s : r.scores()) {
      if (s.label != ground_truth && s.prob > best_wrong) {
        best_wrong = s.prob;
        sweep.wrong_label = s.label;
      }
    }
  }

  sweep.cells.assign(static_cast<std::size_t>(sweep.rows) * sweep.cols, std::nullopt);
  double best_t = -1.0;
  for (std::int64_t i = 0; i < index.size(); ++i) {
    const PixelCoord pc = index.coord(i);
    const QueryResult& r = results[static_cast<std::size_t>(i)];
    SweepCell cell{!r.empty() && r.top1() != ground_truth, r.prob(ground_truth),
                   r.prob(sweep.wrong_label)};
    if (cell.f_t > best_t) {
      best_t = cell.f_t;
      sweep.o_star = pc;
    }
    sweep.cells[static_cast<std::size_t>(pc.row) * sweep.cols + pc.col] = cell;
  }
  sweep.cluster_metric = cluster_metric(sweep);
  sweep.radial = radial_profile(sweep);
  return sweep;
}

std::optional<double> cluster_metric(const SweepResult& sweep) {
  auto success = [&](int r, int c) {
    if (r < 0 || c < 0 || r >= sweep.rows || c >= sweep.cols) return false;
    const auto& cell = sweep.at(r, c);
    return cell && cell->success;
  };
  int total = 0, clustered = 0;
  for (int r = 0; r < sweep.rows; ++r) {
    for (int c = 0; c < sweep.cols; ++c) {
      if (!success(r, c)) continue;
      ++total;
      bool any = false;
      for (int dr = -1; dr <= 1 && !any; ++dr) {
        for (int dc = -1; dc <= 1 && !any; ++dc) {
          if ((dr || dc) && success(r + dr, c + dc)) any = true;
        }
      }
      clustered += any;
    }
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(clustered) / total;
}

std::vector<RadialBin> radial_profile(const SweepResult& sweep) {
  std::map<int, RadialBin> bins;
  for (int r = 0; r < sweep.rows; ++r) {
    for (int c = 0; c < sweep.cols; ++c) {
      const auto& cell = sweep.at(r, c);
      if (!cell) continue;
      const double dr = r - sweep.o_star.row;
      const double dc = c - sweep.o_star.col;
      const int d = static_cast<int>(std::lround(std::sqrt(dr * dr + dc * dc)));
      RadialBin& b = bins[d];
      b.distance = d;
      ++b.count;
      b.f_gt += cell->f_gt;
      b.f_t += cell->f_t;
    }
  }
  std::vector<RadialBin> out;
  for (auto& [d, b] : bins) {
    b.f_gt /= b.count;
    b.f_t /= b.count;
    out.push_back(b);
  }
  return out;
}

SweepResult run_sweep(const AttackConfig& config, const std::string& image_id) {
  auto ctx = make_context(config);
  const PreparedImage img = prepare(*ctx, image_id);
  if (!img.error.empty()) throw RemoteError(img.error);
  if (img.landscape) {
    LandscapeEvaluator ev(*img.landscape, *ctx->synthetic_index, std::nullopt, false);
    return exhaustive_sweep(ev, *ctx->synthetic_index, img.ground_truth, config.sweep_angle);
  }
  CountingOracle counted(*ctx->remote, std::nullopt, false);
  ImageEvaluator ev(img.face, ctx->sticker, img.surface, *img.index, counted,
                    config.composite);
  return exhaustive_sweep(ev, *img.index, img.ground_truth, config.sweep_angle);
}

}  // namespace advsticker

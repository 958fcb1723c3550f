#include <cstdio>
#include <sstream>

#include "advsticker/harness.hpp"
#include "advsticker/io.hpp"
#include "json.hpp"

namespace advsticker {

using nlohmann::json;

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_double(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

// Splits CSV text into records, honouring quoted fields.
std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      field.clear();
      row.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw std::invalid_argument("CSV: unterminated quote");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

const char* kRunHeader =
    "image_id,variant,status,success,queries,generations,position_index,row,col,"
    "angle,stop_path,phase_switched,tau,top1,seed,error,wall_ms";

json run_to_json(const RunRecord& r) {
  json j{{"image_id", r.image_id},
         {"variant", std::string(to_string(r.variant))},
         {"status", r.status},
         {"success", r.success},
         {"queries", r.queries},
         {"generations", r.generations},
         {"theta",
          {{"position_index", r.position_index},
           {"row", r.row},
           {"col", r.col},
           {"angle", r.angle}}},
         {"stop_path", r.stop_path},
         {"phase_switched", r.phase_switched},
         {"tau", r.tau},
         {"top1", r.top1},
         {"seed", r.seed},
         {"error", r.error}};
  if (r.wall_ms) j["wall_ms"] = *r.wall_ms;
  return j;
}

RunRecord run_from_json(const json& j) {
  RunRecord r;
  r.image_id = j.at("image_id").get<std::string>();
  r.variant = parse_variant(j.at("variant").get<std::string>());
  r.status = j.at("status").get<std::string>();
  r.success = j.at("success").get<bool>();
  r.queries = j.at("queries").get<std::int64_t>();
  r.generations = j.at("generations").get<int>();
  const auto& t = j.at("theta");
  r.position_index = t.at("position_index").get<std::int64_t>();
  r.row = t.at("row").get<int>();
  r.col = t.at("col").get<int>();
  r.angle = t.at("angle").get<double>();
  r.stop_path = j.at("stop_path").get<std::string>();
  r.phase_switched = j.at("phase_switched").get<bool>();
  r.tau = j.at("tau").get<std::string>();
  r.top1 = j.at("top1").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.error = j.at("error").get<std::string>();
  r.wall_ms = opt_double(j, "wall_ms");
  return r;
}

json summary_to_json(const VariantSummary& s) {
  return {{"variant", std::string(to_string(s.variant))},
          {"runs", s.runs},
          {"completed", s.completed},
          {"successes", s.successes},
          {"errors", s.errors},
          {"fooling_rate", opt(s.fooling_rate)},
          {"nq_mean_success", opt(s.nq_mean_success)},
          {"nq_median_success", opt(s.nq_median_success)},
          {"nq_mean_all", opt(s.nq_mean_all)},
          {"nq_median_all", opt(s.nq_median_all)}};
}

VariantSummary summary_from_json(const json& j) {
  VariantSummary s;
  s.variant = parse_variant(j.at("variant").get<std::string>());
  s.runs = j.at("runs").get<int>();
  s.completed = j.at("completed").get<int>();
  s.successes = j.at("successes").get<int>();
  s.errors = j.at("errors").get<int>();
  s.fooling_rate = opt_double(j, "fooling_rate");
  s.nq_mean_success = opt_double(j, "nq_mean_success");
  s.nq_median_success = opt_double(j, "nq_median_success");
  s.nq_mean_all = opt_double(j, "nq_mean_all");
  s.nq_median_all = opt_double(j, "nq_median_all");
  return s;
}

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : ""; }

}  // namespace

std::string report_to_json(const AttackReport& report) {
  json doc;
  doc["batch_seed"] = report.batch_seed;
  doc["budget"] = report.budget ? json(*report.budget) : json(nullptr);
  doc["excluded"] = report.excluded;
  doc["summaries"] = json::array();
  for (const auto& s : report.summaries) doc["summaries"].push_back(summary_to_json(s));
  doc["runs"] = json::array();
  for (const auto& r : report.runs) doc["runs"].push_back(run_to_json(r));
  return doc.dump(2) + "\n";
}

AttackReport report_from_json(std::string_view text) {
  AttackReport report;
  try {
    const json doc = json::parse(text);
    report.batch_seed = doc.at("batch_seed").get<std::uint64_t>();
    if (!doc.at("budget").is_null()) report.budget = doc["budget"].get<std::int64_t>();
    report.excluded = doc.at("excluded").get<std::vector<std::string>>();
    for (const auto& s : doc.at("summaries")) report.summaries.push_back(summary_from_json(s));
    for (const auto& r : doc.at("runs")) report.runs.push_back(run_from_json(r));
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("report JSON: ") + e.what());
  }
  return report;
}

std::string report_to_csv(const AttackReport& report) {
  std::ostringstream out;
  out << kRunHeader << '\n';
  for (const auto& r : report.runs) {
    out << csv_field(r.image_id) << ',' << to_string(r.variant) << ',' << r.status << ','
        << (r.success ? 1 : 0) << ',' << r.queries << ',' << r.generations << ','
        << r.position_index << ',' << r.row << ',' << r.col << ',' << num(r.angle) << ','
        << r.stop_path << ',' << (r.phase_switched ? 1 : 0) << ',' << csv_field(r.tau)
        << ',' << csv_field(r.top1) << ',' << r.seed << ',' << csv_field(r.error) << ','
        << opt_num(r.wall_ms) << '\n';
  }
  return out.str();
}

std::vector<RunRecord> runs_from_csv(std::string_view text) {
  const auto rows = parse_csv(text);
  if (rows.empty()) throw std::invalid_argument("CSV: missing header");
  std::vector<RunRecord> runs;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    if (f.size() != 17) throw std::invalid_argument("CSV: row " + std::to_string(i) + " has " + std::to_string(f.size()) + " fields");
    RunRecord r;
    r.image_id = f[0];
    r.variant = parse_variant(f[1]);
    r.status = f[2];
    r.success = f[3] == "1";
    r.queries = std::stoll(f[4]);
    r.generations = std::stoi(f[5]);
    r.position_index = std::stoll(f[6]);
    r.row = std::stoi(f[7]);
    r.col = std::stoi(f[8]);
    r.angle = std::stod(f[9]);
    r.stop_path = f[10];
    r.phase_switched = f[11] == "1";
    r.tau = f[12];
    r.top1 = f[13];
    r.seed = std::stoull(f[14]);
    r.error = f[15];
    if (!f[16].empty()) r.wall_ms = std::stod(f[16]);
    runs.push_back(std::move(r));
  }
  return runs;
}

std::string summary_to_csv(const AttackReport& report) {
  std::ostringstream out;
  out << "variant,runs,completed,successes,errors,excluded,fooling_rate,"
         "nq_mean_success,nq_median_success,nq_mean_all,nq_median_all\n";
  for (const auto& s : report.summaries) {
    out << to_string(s.variant) << ',' << s.runs << ',' << s.completed << ','
        << s.successes << ',' << s.errors << ',' << report.excluded.size() << ','
        << opt_num(s.fooling_rate) << ',' << opt_num(s.nq_mean_success) << ','
        << opt_num(s.nq_median_success) << ',' << opt_num(s.nq_mean_all) << ','
        << opt_num(s.nq_median_all) << '\n';
  }
  return out.str();
}

void emit_report(const AttackReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / "report.json", report_to_json(report));
  write_text_file(dir / "report.csv", report_to_csv(report));
  write_text_file(dir / "summary.csv", summary_to_csv(report));
}

std::string heatmap_csv(const SweepResult& sweep, HeatmapField field) {
  std::ostringstream out;
  for (int r = 0; r < sweep.rows; ++r) {
    for (int c = 0; c < sweep.cols; ++c) {
      if (c) out << ',';
      const auto& cell = sweep.at(r, c);
      if (!cell) continue;
      switch (field) {
        case HeatmapField::Success: out << (cell->success ? 1 : 0); break;
        case HeatmapField::GroundTruth: out << num(cell->f_gt); break;
        case HeatmapField::Wrong: out << num(cell->f_t); break;
      }
    }
    out << '\n';
  }
  return out.str();
}

std::string sweep_to_json(const SweepResult& sweep) {
  json cells = json::array();
  for (int r = 0; r < sweep.rows; ++r) {
    for (int c = 0; c < sweep.cols; ++c) {
      const auto& cell = sweep.at(r, c);
      if (!cell) continue;
      cells.push_back({{"row", r},
                       {"col", c},
                       {"success", cell->success},
                       {"f_gt", cell->f_gt},
                       {"f_t", cell->f_t}});
    }
  }
  json radial = json::array();
  for (const auto& b : sweep.radial) {
    radial.push_back(
        {{"distance", b.distance}, {"count", b.count}, {"f_gt", b.f_gt}, {"f_t", b.f_t}});
  }
  json doc{{"rows", sweep.rows},
           {"cols", sweep.cols},
           {"angle", sweep.angle},
           {"ground_truth", sweep.ground_truth},
           {"wrong_label", sweep.wrong_label},
           {"queries", sweep.queries},
           {"o_star", {{"row", sweep.o_star.row}, {"col", sweep.o_star.col}}},
           {"cluster_metric", opt(sweep.cluster_metric)},
           {"radial", radial},
           {"cells", cells}};
  return doc.dump(2) + "\n";
}

void emit_sweep(const SweepResult& sweep, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / "sweep.json", sweep_to_json(sweep));
  write_text_file(dir / "heatmap_success.csv", heatmap_csv(sweep, HeatmapField::Success));
  write_text_file(dir / "heatmap_f_gt.csv", heatmap_csv(sweep, HeatmapField::GroundTruth));
  write_text_file(dir / "heatmap_f_t.csv", heatmap_csv(sweep, HeatmapField::Wrong));
  std::ostringstream radial;
  radial << "distance,count,f_gt,f_t\n";
  for (const auto& b : sweep.radial) {
    radial << b.distance << ',' << b.count << ',' << num(b.f_gt) << ',' << num(b.f_t) << '\n';
  }
  write_text_file(dir / "radial.csv", radial.str());
}

}  // namespace advsticker

#include "pixle/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "pixle/png_io.hpp"
#include "pixle/rng.hpp"

namespace pixle {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::size_t parse_count(const std::string& text, const std::string& what) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != text.size() || text.empty() || text[0] == '-') {
    throw DatasetError("invalid " + what + " '" + text + "'");
  }
  return static_cast<std::size_t>(v);
}

/// Runs fn(i) for i in [0, n) on up to `workers` threads and reports which
/// items completed before `stop` was observed.
template <typename Fn>
std::vector<bool> run_pool(std::size_t n, std::size_t workers, const std::atomic<bool>* stop, Fn&& fn) {
  std::vector<bool> ran(n, false);
  std::vector<char> ran_flags(n, 0);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      if (stop != nullptr && stop->load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      fn(i);
      ran_flags[i] = 1;
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(worker);
  }
  for (std::size_t i = 0; i < n; ++i) ran[i] = ran_flags[i] != 0;
  return ran;
}

ItemSummary summarize(const DatasetItem& item, const AttackGoal& goal, const AttackOutcome& o) {
  ItemSummary s;
  s.id = item.id;
  s.label = item.label;
  s.target = goal.target;
  s.success = o.success;
  s.queries = o.queries;
  s.l0 = o.l0;
  s.final_loss = o.final_loss;
  s.applied_moves = o.applied_moves;
  return s;
}

struct ItemResult {
  ItemSummary summary;
  std::optional<AttackOutcome> outcome;
};

ItemResult attack_item(const DatasetItem& item, const AttackGoal& goal, Oracle& oracle,
                       AttackConfig config) {
  ItemResult r;
  r.summary.id = item.id;
  r.summary.label = item.label;
  r.summary.target = goal.target;
  try {
    const ImageTensor image = item.load();
    AttackOutcome outcome = run_attack(image, goal, oracle, config);
    r.summary = summarize(item, goal, outcome);
    r.outcome = std::move(outcome);
  } catch (const AttackAborted& e) {
    r.summary.status = ItemStatus::Error;
    r.summary.queries = e.queries();
    r.summary.error = e.what();
  } catch (const Error& e) {
    r.summary.status = ItemStatus::Error;
    r.summary.error = e.what();
  }
  return r;
}

void save_adversarial(const fs::path& dir, const std::string& id, const ImageTensor& image) {
  if (image.channels() != 1 && image.channels() != 3) {
    std::cerr << "pixle: skipping PNG for " << id << " (" << image.channels() << " channels)\n";
    return;
  }
  save_png(dir / (id + "_adv.png"), image);
}

std::ofstream open_for_write(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DatasetError("cannot write " + path.string());
  return out;
}

}  // namespace

// -- dataset -----------------------------------------------------------------

ImageTensor DatasetItem::load() const {
  if (image) return *image;
  return load_png(path);
}

void LabeledDataset::validate() const {
  std::set<std::string> ids;
  for (const auto& item : items) {
    if (item.label >= class_count) {
      throw DatasetError("item " + item.id + " has label " + std::to_string(item.label) +
                         " outside " + std::to_string(class_count) + " classes");
    }
    if (!ids.insert(item.id).second) throw DatasetError("duplicate id " + item.id);
  }
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path, std::string_view expected_header) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DatasetError(path.string() + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected_header) {
    throw DatasetError(path.string() + ": expected header '" + std::string(expected_header) + "'");
  }
  const std::size_t columns = split(line, ',').size();
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line, ',');
    if (fields.size() != columns) throw DatasetError(path.string() + ": malformed row '" + line + "'");
    rows.push_back(std::move(fields));
  }
  return rows;
}

LabeledDataset load_manifest(const fs::path& manifest, std::optional<std::size_t> class_count) {
  LabeledDataset ds;
  const fs::path base = manifest.parent_path();
  std::size_t max_label = 0;
  for (auto& row : read_csv(manifest, "id,path,label")) {
    DatasetItem item;
    item.id = row[0];
    item.path = base / row[1];
    item.label = parse_count(row[2], "label");
    max_label = std::max(max_label, item.label);
    ds.items.push_back(std::move(item));
  }
  ds.class_count = class_count.value_or(ds.items.empty() ? 0 : max_label + 1);
  ds.validate();
  return ds;
}

Selection select_correctly_classified(const LabeledDataset& dataset, Oracle& oracle,
                                      std::size_t per_class_quota) {
  Selection sel;
  sel.dataset.class_count = dataset.class_count;
  sel.per_class.assign(dataset.class_count, 0);
  std::size_t full_classes = 0;
  for (const auto& item : dataset.items) {
    if (full_classes == dataset.class_count) break;
    if (sel.per_class[item.label] >= per_class_quota) continue;
    const ImageTensor image = item.load();
    const ProbVector probs = oracle.query(image);
    if (argmax(probs) != item.label) continue;
    DatasetItem kept = item;
    kept.image = image;
    sel.dataset.items.push_back(std::move(kept));
    if (++sel.per_class[item.label] == per_class_quota) ++full_classes;
  }
  for (std::size_t c = 0; c < dataset.class_count; ++c) {
    if (sel.per_class[c] == 0) {
      sel.warnings.push_back("class " + std::to_string(c) + " has no correctly classified items");
    } else if (sel.per_class[c] < per_class_quota) {
      sel.warnings.push_back("class " + std::to_string(c) + " has only " +
                             std::to_string(sel.per_class[c]) + " correctly classified items");
    }
  }
  return sel;
}

// -- statistics --------------------------------------------------------------

Stat aggregate_metrics(std::span<const double> values) {
  if (values.empty()) throw StatisticsError("statistics of an empty list are undefined");
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / static_cast<double>(values.size()))};
}

std::size_t CampaignReport::failed_items() const {
  return static_cast<std::size_t>(std::count_if(per_image.begin(), per_image.end(), [](const auto& s) {
    return s.status == ItemStatus::Error;
  }));
}

void recompute_statistics(CampaignReport& report) {
  std::vector<double> iterations;
  std::vector<double> l0;
  std::size_t successes = 0;
  for (const auto& s : report.per_image) {
    if (s.status != ItemStatus::Ok) continue;
    iterations.push_back(static_cast<double>(s.queries));
    if (s.success) {
      ++successes;
      l0.push_back(static_cast<double>(s.l0));
    }
  }
  report.success_rate =
      iterations.empty() ? 0.0 : 100.0 * static_cast<double>(successes) / static_cast<double>(iterations.size());
  report.iterations = iterations.empty() ? std::nullopt : std::optional(aggregate_metrics(iterations));
  report.l0 = l0.empty() ? std::nullopt : std::optional(aggregate_metrics(l0));
}

// -- serialization -----------------------------------------------------------

json to_json(const AttackConfig& c) {
  return {{"algorithm", to_string(c.algorithm)},
          {"restarts", c.restarts},
          {"iterations", c.iterations},
          {"patch_min", c.patch_min},
          {"patch_max", c.patch_max},
          {"mapping", to_string(c.mapping)},
          {"transfer", to_string(c.transfer)},
          {"seed", c.seed},
          {"early_stop", c.early_stop}};
}

AttackConfig attack_config_from_json(const json& j) {
  AttackConfig c;
  c.algorithm = parse_search_algorithm(j.at("algorithm").get<std::string>());
  c.restarts = j.at("restarts").get<std::size_t>();
  c.iterations = j.at("iterations").get<std::size_t>();
  c.patch_min = j.at("patch_min").get<std::size_t>();
  c.patch_max = j.at("patch_max").get<std::size_t>();
  c.mapping = parse_mapping_kind(j.at("mapping").get<std::string>());
  c.transfer = parse_transfer_mode(j.at("transfer").get<std::string>());
  c.seed = j.at("seed").get<std::uint64_t>();
  c.early_stop = j.at("early_stop").get<bool>();
  return c;
}

namespace {

json to_json(const ItemSummary& s) {
  json j = {{"id", s.id},
            {"label", s.label},
            {"status", s.status == ItemStatus::Ok ? "ok" : "error"},
            {"success", s.success},
            {"queries", s.queries},
            {"l0", s.l0},
            {"final_loss", s.final_loss},
            {"applied_moves", s.applied_moves}};
  j["target"] = s.target ? json(*s.target) : json(nullptr);
  if (s.status == ItemStatus::Error) j["error"] = s.error;
  return j;
}

ItemSummary item_from_json(const json& j) {
  ItemSummary s;
  s.id = j.at("id").get<std::string>();
  s.label = j.at("label").get<std::size_t>();
  if (!j.at("target").is_null()) s.target = j["target"].get<std::size_t>();
  s.status = j.at("status") == "ok" ? ItemStatus::Ok : ItemStatus::Error;
  s.success = j.at("success").get<bool>();
  s.queries = j.at("queries").get<std::size_t>();
  s.l0 = j.at("l0").get<std::size_t>();
  s.final_loss = j.at("final_loss").get<double>();
  s.applied_moves = j.at("applied_moves").get<std::size_t>();
  s.error = j.value("error", std::string());
  return s;
}

json optional_number(const std::optional<Stat>& s, bool mean) {
  if (!s) return nullptr;
  return mean ? s->mean : s->std;
}

}  // namespace

json to_json(const CampaignReport& r) {
  json items = json::array();
  for (const auto& s : r.per_image) items.push_back(to_json(s));
  return {{"success_rate", r.success_rate},
          {"iterations_mean", optional_number(r.iterations, true)},
          {"iterations_std", optional_number(r.iterations, false)},
          {"l0_mean", optional_number(r.l0, true)},
          {"l0_std", optional_number(r.l0, false)},
          {"per_image", items},
          {"config_echo", to_json(r.config_echo)},
          {"wall_time", r.wall_time}};
}

CampaignReport campaign_report_from_json(const json& j) {
  CampaignReport r;
  r.success_rate = j.at("success_rate").get<double>();
  if (!j.at("iterations_mean").is_null()) {
    r.iterations = Stat{j["iterations_mean"].get<double>(), j.at("iterations_std").get<double>()};
  }
  if (!j.at("l0_mean").is_null()) r.l0 = Stat{j["l0_mean"].get<double>(), j.at("l0_std").get<double>()};
  for (const auto& item : j.at("per_image")) r.per_image.push_back(item_from_json(item));
  r.config_echo = attack_config_from_json(j.at("config_echo"));
  r.wall_time = j.at("wall_time").get<double>();
  return r;
}

json to_json(const AttackOutcome& o) {
  return {{"success", o.success},
          {"queries", o.queries},
          {"l0", o.l0},
          {"final_loss", o.final_loss},
          {"applied_moves", o.applied_moves}};
}

void write_trajectory_csv(const fs::path& path, std::span<const TrajectoryPoint> trajectory) {
  auto out = open_for_write(path);
  out << "query,loss\n";
  for (const auto& p : trajectory) out << p.query << ',' << format_real(p.loss) << '\n';
}

std::vector<TrajectoryPoint> read_trajectory_csv(const fs::path& path) {
  std::vector<TrajectoryPoint> out;
  for (const auto& row : read_csv(path, "query,loss")) {
    out.push_back({parse_count(row[0], "query"), std::stod(row[1])});
  }
  return out;
}

// -- campaign ----------------------------------------------------------------

CampaignReport run_campaign(const LabeledDataset& dataset, Oracle& oracle, const AttackConfig& config,
                            const CampaignOptions& options) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  const std::size_t n = dataset.items.size();
  std::vector<ItemResult> results(n);
  const std::size_t workers = oracle.concurrent_safe() ? options.workers : 1;

  const auto ran = run_pool(n, workers, options.stop, [&](std::size_t i) {
    AttackConfig item_config = config;
    item_config.seed = mix_seed(config.seed, i);
    const auto& item = dataset.items[i];
    results[i] = attack_item(item, AttackGoal::untargeted(item.label), oracle, item_config);
  });

  CampaignReport report;
  report.config_echo = config;
  for (std::size_t i = 0; i < n; ++i) {
    if (ran[i]) {
      report.per_image.push_back(results[i].summary);
    } else {
      report.interrupted = true;
    }
  }
  recompute_statistics(report);
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  if (options.out_dir) {
    const fs::path dir = *options.out_dir;
    fs::create_directories(dir / "trajectories");
    fs::create_directories(dir / "images");
    auto csv = open_for_write(dir / "per_image.csv");
    csv << "id,success,queries,l0,final_loss\n";
    for (std::size_t i = 0; i < n; ++i) {
      if (!ran[i] || !results[i].outcome) continue;
      const auto& s = results[i].summary;
      const auto& o = *results[i].outcome;
      csv << s.id << ',' << (s.success ? 1 : 0) << ',' << s.queries << ',' << s.l0 << ','
          << format_real(s.final_loss) << '\n';
      write_trajectory_csv(dir / "trajectories" / (s.id + ".csv"), o.trajectory);
      save_adversarial(dir / "images", s.id, o.adversarial);
    }
    auto out = open_for_write(dir / "report.json");
    out << to_json(report).dump(2) << '\n';
  }
  return report;
}

// -- targeted matrix ---------------------------------------------------------

std::optional<double> MatrixCell::percent() const {
  if (attempts == 0) return std::nullopt;
  return 100.0 * static_cast<double>(successes) / static_cast<double>(attempts);
}

double TargetedMatrix::overall_success_rate() const {
  std::size_t attempts = 0;
  std::size_t successes = 0;
  for (const auto& c : cells) {
    attempts += c.attempts;
    successes += c.successes;
  }
  return attempts == 0 ? 0.0 : 100.0 * static_cast<double>(successes) / static_cast<double>(attempts);
}

json to_json(const TargetedMatrix& m) {
  json cells = json::array();
  json attempts = json::array();
  json flagged = json::array();
  for (std::size_t s = 0; s < m.class_count; ++s) {
    json row = json::array();
    json att = json::array();
    for (std::size_t t = 0; t < m.class_count; ++t) {
      const auto& c = m.cell(s, t);
      const auto p = c.percent();
      row.push_back(s == t || !p ? json(nullptr) : json(*p));
      att.push_back(c.attempts);
      if (s != t && c.insufficient) flagged.push_back({s, t});
    }
    cells.push_back(row);
    attempts.push_back(att);
  }
  return {{"class_count", m.class_count},
          {"quota", m.quota},
          {"cells", cells},
          {"attempts", attempts},
          {"insufficient", flagged},
          {"overall_success_rate", m.overall_success_rate()}};
}

TargetedMatrix run_targeted_matrix(const LabeledDataset& dataset, Oracle& oracle,
                                   const AttackConfig& config, std::size_t per_pair_quota,
                                   const CampaignOptions& options, std::vector<MatrixRecord>* records) {
  config.validate();
  const std::size_t k = dataset.class_count;
  if (k < 2) throw ConfigError("a targeted matrix needs at least 2 classes");
  const Selection sel = select_correctly_classified(dataset, oracle, per_pair_quota);
  for (const auto& w : sel.warnings) std::cerr << "pixle: " << w << '\n';

  struct Job {
    std::size_t source;
    std::size_t target;
    const DatasetItem* item;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < k; ++s) {
    std::vector<const DatasetItem*> pool;
    for (const auto& item : sel.dataset.items) {
      if (item.label == s) pool.push_back(&item);
    }
    for (std::size_t t = 0; t < k; ++t) {
      if (s == t) continue;
      const std::uint64_t pair_seed = mix_seed(config.seed, s * k + t);
      for (std::size_t i = 0; i < pool.size(); ++i) jobs.push_back({s, t, pool[i], mix_seed(pair_seed, i)});
    }
  }

  std::vector<ItemResult> results(jobs.size());
  const std::size_t workers = oracle.concurrent_safe() ? options.workers : 1;
  const auto ran = run_pool(jobs.size(), workers, options.stop, [&](std::size_t i) {
    AttackConfig item_config = config;
    item_config.seed = jobs[i].seed;
    results[i] = attack_item(*jobs[i].item, AttackGoal::targeted(jobs[i].source, jobs[i].target),
                             oracle, item_config);
  });

  TargetedMatrix m;
  m.class_count = k;
  m.quota = per_pair_quota;
  m.cells.assign(k * k, {});
  std::vector<MatrixRecord> local;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (!ran[i] || results[i].summary.status != ItemStatus::Ok) continue;
    const auto& s = results[i].summary;
    auto& cell = m.cells[jobs[i].source * k + jobs[i].target];
    ++cell.attempts;
    if (s.success) ++cell.successes;
    local.push_back({jobs[i].source, jobs[i].target, s.id, s.success, s.queries, s.l0, s.final_loss});
  }
  for (std::size_t s = 0; s < k; ++s) {
    for (std::size_t t = 0; t < k; ++t) {
      if (s != t) m.cells[s * k + t].insufficient = m.cells[s * k + t].attempts < per_pair_quota;
    }
  }

  if (options.out_dir) {
    fs::create_directories(*options.out_dir);
    auto csv = open_for_write(*options.out_dir / "matrix_records.csv");
    csv << "source,target,id,success,queries,l0,final_loss\n";
    for (const auto& r : local) {
      csv << r.source << ',' << r.target << ',' << r.id << ',' << (r.success ? 1 : 0) << ','
          << r.queries << ',' << r.l0 << ',' << format_real(r.final_loss) << '\n';
    }
    json doc = to_json(m);
    doc["config_echo"] = to_json(config);
    auto out = open_for_write(*options.out_dir / "matrix.json");
    out << doc.dump(2) << '\n';
  }
  if (records != nullptr) *records = std::move(local);
  return m;
}

}  // namespace pixle

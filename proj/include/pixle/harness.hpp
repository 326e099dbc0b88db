#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pixle/image.hpp"
#include "pixle/oracle.hpp"
#include "pixle/search.hpp"

namespace pixle {

struct DatasetItem {
  std::string id;
  std::filesystem::path path;        // used when `image` is empty
  std::optional<ImageTensor> image;  // inline tensor
  std::size_t label = 0;

  ImageTensor load() const;
};

struct LabeledDataset {
  std::vector<DatasetItem> items;
  std::size_t class_count = 0;

  /// Labels below class_count, ids unique.
  void validate() const;
};

/// Reads a CSV manifest with header "id,path,label"; paths are relative to the
/// manifest. class_count defaults to the largest label plus one.
LabeledDataset load_manifest(const std::filesystem::path& manifest,
                             std::optional<std::size_t> class_count = std::nullopt);

struct Selection {
  LabeledDataset dataset;
  std::vector<std::size_t> per_class;  // kept items per class
  std::vector<std::string> warnings;
};

/// Keeps, in stored order, items the oracle already classifies correctly until
/// every class holds `per_class_quota` of them.
Selection select_correctly_classified(const LabeledDataset& dataset, Oracle& oracle,
                                      std::size_t per_class_quota);

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  friend bool operator==(const Stat&, const Stat&) = default;
};

/// Throws StatisticsError on an empty list.
Stat aggregate_metrics(std::span<const double> values);

enum class ItemStatus { Ok, Error };

struct ItemSummary {
  std::string id;
  std::size_t label = 0;
  std::optional<std::size_t> target;
  ItemStatus status = ItemStatus::Ok;
  bool success = false;
  std::size_t queries = 0;
  std::size_t l0 = 0;
  double final_loss = 0.0;
  std::size_t applied_moves = 0;
  std::string error;

  friend bool operator==(const ItemSummary&, const ItemSummary&) = default;
};

struct CampaignReport {
  double success_rate = 0.0;
  std::optional<Stat> iterations;  // over every completed attack
  std::optional<Stat> l0;          // over successful attacks only
  std::vector<ItemSummary> per_image;
  AttackConfig config_echo;
  double wall_time = 0.0;
  bool interrupted = false;

  std::size_t failed_items() const;
};

struct CampaignOptions {
  std::size_t workers = 1;
  std::optional<std::filesystem::path> out_dir;
  /// Polled between items; when set, remaining items are skipped and the
  /// partial report is still written.
  const std::atomic<bool>* stop = nullptr;
};

/// Untargeted attack on every item; item i uses seed mix_seed(config.seed, i).
CampaignReport run_campaign(const LabeledDataset& dataset, Oracle& oracle, const AttackConfig& config,
                            const CampaignOptions& options = {});

/// Rebuilds the aggregate fields from per-image summaries.
void recompute_statistics(CampaignReport& report);

nlohmann::json to_json(const AttackConfig& config);
AttackConfig attack_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CampaignReport& report);
CampaignReport campaign_report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AttackOutcome& outcome);

/// Writes trajectory CSV ("query,loss").
void write_trajectory_csv(const std::filesystem::path& path, std::span<const TrajectoryPoint> trajectory);
std::vector<TrajectoryPoint> read_trajectory_csv(const std::filesystem::path& path);

struct MatrixCell {
  std::size_t attempts = 0;
  std::size_t successes = 0;
  bool insufficient = false;  // fewer source images than the quota

  std::optional<double> percent() const;
};

struct TargetedMatrix {
  std::size_t class_count = 0;
  std::size_t quota = 0;
  std::vector<MatrixCell> cells;  // row-major (source, target); diagonal unused

  const MatrixCell& cell(std::size_t source, std::size_t target) const {
    return cells[source * class_count + target];
  }
  double overall_success_rate() const;
};

struct MatrixRecord {
  std::size_t source = 0;
  std::size_t target = 0;
  std::string id;
  bool success = false;
  std::size_t queries = 0;
  std::size_t l0 = 0;
  double final_loss = 0.0;
};

/// Targeted attack for every ordered class pair over `per_pair_quota` correctly
/// classified images of the source class. Persists matrix.json and
/// matrix_records.csv when options.out_dir is set.
TargetedMatrix run_targeted_matrix(const LabeledDataset& dataset, Oracle& oracle,
                                   const AttackConfig& config, std::size_t per_pair_quota,
                                   const CampaignOptions& options = {},
                                   std::vector<MatrixRecord>* records = nullptr);

nlohmann::json to_json(const TargetedMatrix& matrix);

/// Minimal CSV reader for the files this project writes (no quoting).
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path,
                                               std::string_view expected_header);

}  // namespace pixle

#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace pixle {

/// Loss trajectory of one attacked image, as persisted by a campaign.
struct RunTrace {
  std::string id;
  bool success = false;
  std::vector<double> losses;  // losses[i] is the loss at query i + 1
};

/// Reads per_image.csv and trajectories/<id>.csv from a campaign directory.
std::vector<RunTrace> load_campaign_traces(const std::filesystem::path& campaign_dir);

/// Per-query mean loss over the runs still alive at that query.
std::vector<double> mean_loss_series(const std::vector<RunTrace>& runs);

/// Entry q counts runs not yet solved after q queries, for q = 0 .. longest run.
/// A failed run is never solved.
std::vector<std::size_t> remaining_series(const std::vector<RunTrace>& runs);

/// Writes scatter.csv, mean_loss.csv, remaining.csv and losses.svg into `out_dir`.
void write_plot_outputs(const std::vector<RunTrace>& runs, const std::filesystem::path& out_dir);

}  // namespace pixle

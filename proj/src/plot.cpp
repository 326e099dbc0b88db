#include "pixle/plot.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "pixle/errors.hpp"
#include "pixle/harness.hpp"

namespace pixle {

namespace fs = std::filesystem;

namespace {

std::string real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::size_t longest(const std::vector<RunTrace>& runs) {
  std::size_t n = 0;
  for (const auto& r : runs) n = std::max(n, r.losses.size());
  return n;
}

void render_svg(const std::vector<RunTrace>& runs, const std::vector<double>& mean,
                const std::vector<std::size_t>& remaining, const fs::path& path) {
  constexpr double kWidth = 640, kPanel = 220, kLeft = 50, kTop = 20, kGap = 50;
  const double plot_w = kWidth - kLeft - 20;
  const double max_q = static_cast<double>(std::max<std::size_t>(remaining.size() - 1, 1));
  const double max_count = static_cast<double>(std::max<std::size_t>(runs.size(), 1));
  auto x_of = [&](double q) { return kLeft + plot_w * q / max_q; };

  std::ofstream svg(path);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kTop + 2 * kPanel + kGap + 30 << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  // Loss panel: every run in grey, per-query mean in red.
  const double top_base = kTop + kPanel;
  svg << "<text x=\"" << kLeft << "\" y=\"" << kTop - 5 << "\" font-size=\"12\">loss per query</text>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << top_base << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
      << top_base << "\" stroke=\"black\"/>\n";
  for (const auto& run : runs) {
    for (std::size_t i = 0; i < run.losses.size(); ++i) {
      svg << "<circle cx=\"" << coord(x_of(static_cast<double>(i + 1))) << "\" cy=\""
          << coord(top_base - kPanel * run.losses[i]) << "\" r=\"1\" fill=\"#888\"/>\n";
    }
  }
  for (std::size_t i = 0; i < mean.size(); ++i) {
    svg << "<circle cx=\"" << coord(x_of(static_cast<double>(i + 1))) << "\" cy=\""
        << coord(top_base - kPanel * mean[i]) << "\" r=\"1.5\" fill=\"red\"/>\n";
  }
  // Remaining-images panel.
  const double bottom_top = top_base + kGap;
  const double bottom_base = bottom_top + kPanel;
  svg << "<text x=\"" << kLeft << "\" y=\"" << bottom_top - 5
      << "\" font-size=\"12\">images left to attack</text>\n";
  svg << "<polyline fill=\"none\" stroke=\"steelblue\" points=\"";
  for (std::size_t q = 0; q < remaining.size(); ++q) {
    svg << coord(x_of(static_cast<double>(q))) << ','
        << coord(bottom_base - kPanel * static_cast<double>(remaining[q]) / max_count) << ' ';
  }
  svg << "\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << bottom_base << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
      << bottom_base << "\" stroke=\"black\"/>\n";
  svg << "</svg>\n";
}

}  // namespace

std::vector<RunTrace> load_campaign_traces(const fs::path& campaign_dir) {
  const fs::path index = campaign_dir / "per_image.csv";
  if (!fs::exists(index)) throw DatasetError("no per_image.csv in " + campaign_dir.string());
  std::vector<RunTrace> runs;
  for (const auto& row : read_csv(index, "id,success,queries,l0,final_loss")) {
    RunTrace run;
    run.id = row[0];
    run.success = row[1] == "1";
    for (const auto& p : read_trajectory_csv(campaign_dir / "trajectories" / (run.id + ".csv"))) {
      run.losses.push_back(p.loss);
    }
    runs.push_back(std::move(run));
  }
  return runs;
}

std::vector<double> mean_loss_series(const std::vector<RunTrace>& runs) {
  std::vector<double> sum(longest(runs), 0.0);
  std::vector<std::size_t> live(sum.size(), 0);
  for (const auto& r : runs) {
    for (std::size_t i = 0; i < r.losses.size(); ++i) {
      sum[i] += r.losses[i];
      ++live[i];
    }
  }
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] /= static_cast<double>(live[i]);
  return sum;
}

std::vector<std::size_t> remaining_series(const std::vector<RunTrace>& runs) {
  std::vector<std::size_t> out(longest(runs) + 1, 0);
  for (std::size_t q = 0; q < out.size(); ++q) {
    for (const auto& r : runs) {
      if (!r.success || r.losses.size() > q) ++out[q];
    }
  }
  return out;
}

void write_plot_outputs(const std::vector<RunTrace>& runs, const fs::path& out_dir) {
  if (runs.empty()) throw DatasetError("campaign has no attacked images");
  fs::create_directories(out_dir);
  const auto mean = mean_loss_series(runs);
  const auto remaining = remaining_series(runs);

  std::ofstream scatter(out_dir / "scatter.csv");
  scatter << "id,query,loss\n";
  for (const auto& r : runs) {
    for (std::size_t i = 0; i < r.losses.size(); ++i) scatter << r.id << ',' << i + 1 << ',' << real(r.losses[i]) << '\n';
  }
  std::ofstream mean_csv(out_dir / "mean_loss.csv");
  mean_csv << "query,mean_loss\n";
  for (std::size_t i = 0; i < mean.size(); ++i) mean_csv << i + 1 << ',' << real(mean[i]) << '\n';
  std::ofstream rem_csv(out_dir / "remaining.csv");
  rem_csv << "queries,remaining\n";
  for (std::size_t q = 0; q < remaining.size(); ++q) rem_csv << q << ',' << remaining[q] << '\n';
  render_svg(runs, mean, remaining, out_dir / "losses.svg");
  if (!scatter || !mean_csv || !rem_csv) throw DatasetError("cannot write plot data to " + out_dir.string());
}

}  // namespace pixle

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "pixle/cli.hpp"
#include "pixle/harness.hpp"
#include "pixle/plot.hpp"
#include "pixle/png_io.hpp"
#include "test_support.hpp"

namespace pixle {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<RunTrace> example_runs() {
  return {{"a", true, {0.9, 0.4}}, {"b", true, {0.9, 0.8, 0.2}}};
}

// 1x4x4 image the pixel-probe assigns to class 0 and that one move can flip.
ImageTensor probe_image() {
  ImageTensor img(1, 4, 4, 0.1f);
  img.set(0, 0, 0, 0.9f);
  return img;
}

TEST(PlotSeries, MeanOverLiveRuns) {
  const auto mean = mean_loss_series(example_runs());
  ASSERT_EQ(mean.size(), 3u);
  EXPECT_NEAR(mean[0], 0.9, 1e-12);
  EXPECT_NEAR(mean[1], 0.6, 1e-12);
  EXPECT_NEAR(mean[2], 0.2, 1e-12);
}

TEST(PlotSeries, RemainingCounts) {
  EXPECT_EQ(remaining_series(example_runs()), (std::vector<std::size_t>{2, 2, 1, 0}));
  auto runs = example_runs();
  runs[1].success = false;
  EXPECT_EQ(remaining_series(runs), (std::vector<std::size_t>{2, 2, 1, 1}));
}

TEST(PlotSeries, RemainingMatchesTerminationRecount) {
  std::mt19937_64 gen(2);
  std::uniform_int_distribution<std::size_t> len(1, 30);
  std::bernoulli_distribution ok(0.7);
  std::vector<RunTrace> runs;
  for (int i = 0; i < 40; ++i) runs.push_back({"r" + std::to_string(i), ok(gen), std::vector<double>(len(gen), 0.5)});
  const auto remaining = remaining_series(runs);
  std::size_t longest = 0;
  for (const auto& r : runs) longest = std::max(longest, r.losses.size());
  ASSERT_EQ(remaining.size(), longest + 1);
  // A successful run is solved from its last query onwards.
  std::vector<std::size_t> solved_at(longest + 1, 0);
  for (const auto& r : runs) {
    if (r.success) ++solved_at[r.losses.size()];
  }
  std::size_t left = runs.size();
  for (std::size_t q = 0; q <= longest; ++q) {
    left -= solved_at[q];
    EXPECT_EQ(remaining[q], left) << q;
  }
}

TEST(PlotOutputs, FilesAndEmptyInput) {
  testing::TempDir dir;
  write_plot_outputs(example_runs(), dir.path());
  for (const char* f : {"scatter.csv", "mean_loss.csv", "remaining.csv", "losses.svg"}) {
    EXPECT_TRUE(fs::exists(dir.path() / f)) << f;
  }
  EXPECT_NE(slurp(dir.path() / "losses.svg").find("<svg"), std::string::npos);
  EXPECT_THROW(write_plot_outputs({}, dir.path() / "empty"), DatasetError);
}

TEST(Cli, HelpDocumentsDefaults) {
  const auto r = cli({"attack", "--help"});
  EXPECT_EQ(r.code, kExitSuccess);
  for (const char* text : {"[100]", "[50]", "[3]", "[random]", "[overwrite]", "[restart]", "[0]"}) {
    EXPECT_NE(r.out.find(text), std::string::npos) << text;
  }
}

TEST(Cli, MissingLabelIsUsageErrorWithoutOracleContact) {
  testing::TempDir dir;
  save_png(dir.path() / "x.png", probe_image());
  const fs::path marker = dir.path() / "contacted";
  const std::string oracle = "process:touch " + marker.string() + " && exec " + PIXLE_FAKE_SERVER;
  const auto r = cli({"attack", "--oracle", oracle, "--image", (dir.path() / "x.png").string()});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("--label"), std::string::npos);
  EXPECT_FALSE(fs::exists(marker));

  const auto bad_config = cli({"attack", "--oracle", oracle, "--image", (dir.path() / "x.png").string(), "--label",
                               "0", "--patch-min", "4", "--patch-max", "2"});
  EXPECT_EQ(bad_config.code, kExitUsage);
  EXPECT_FALSE(fs::exists(marker));

  // Control: a complete invocation does reach the oracle.
  const auto ok = cli({"attack", "--oracle", oracle, "--image", (dir.path() / "x.png").string(), "--label", "0",
                       "--out", (dir.path() / "out").string()});
  EXPECT_EQ(ok.code, kExitSuccess) << ok.err;
  EXPECT_TRUE(fs::exists(marker));
}

TEST(Cli, ZeroIterationsExitsThreeWithOriginal) {
  testing::TempDir dir;
  save_png(dir.path() / "x.png", probe_image());
  const auto r = cli({"attack", "--oracle", "builtin:pixel-probe", "--image", (dir.path() / "x.png").string(),
                      "--label", "0", "--iters", "0", "--algorithm", "iterative", "--out", dir.path().string()});
  EXPECT_EQ(r.code, kExitAttackFailed) << r.err;
  EXPECT_EQ(load_png(dir.path() / "x_adv.png"), load_png(dir.path() / "x.png"));
  EXPECT_EQ(read_trajectory_csv(dir.path() / "x_trajectory.csv").size(), 1u);
}

TEST(Cli, ConfigEchoMatchesDefaults) {
  testing::TempDir dir;
  save_png(dir.path() / "x.png", probe_image());
  const auto r = cli({"attack", "--oracle", "builtin:pixel-probe", "--image", (dir.path() / "x.png").string(),
                      "--label", "0", "--mapping", "random", "--patch-min", "3", "--patch-max", "3", "--restarts",
                      "100", "--iters", "50", "--out", dir.path().string()});
  EXPECT_EQ(r.code, kExitSuccess) << r.err;
  std::ifstream in(dir.path() / "x_outcome.json");
  const auto doc = nlohmann::json::parse(in);
  EXPECT_EQ(doc["config_echo"], to_json(AttackConfig{}));
  EXPECT_EQ(doc["config_echo"]["restarts"], 100);
  EXPECT_EQ(doc["config_echo"]["iterations"], 50);
  EXPECT_TRUE(doc["success"].get<bool>());
}

TEST(Cli, UsageAndIoErrors) {
  testing::TempDir dir;
  EXPECT_EQ(cli({}).code, kExitUsage);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(cli({"attack", "--oracle", "nope", "--image", "x.png", "--label", "0"}).code, kExitUsage);
  EXPECT_EQ(cli({"attack", "--oracle", "builtin:pixel-probe", "--image", "x.png", "--label", "0", "--mapping",
                 "sideways"}).code,
            kExitUsage);
  EXPECT_EQ(cli({"attack", "--oracle", "builtin:pixel-probe", "--image", (dir.path() / "missing.png").string(),
                 "--label", "0"}).code,
            kExitOracleOrIo);
  save_png(dir.path() / "x.png", probe_image());
  EXPECT_EQ(cli({"attack", "--oracle", "builtin:pixel-probe", "--image", (dir.path() / "x.png").string(), "--label",
                 "5", "--out", dir.path().string()}).code,
            kExitUsage);
  EXPECT_EQ(cli({"attack", "--oracle", "process:exit 1", "--image", (dir.path() / "x.png").string(), "--label",
                 "0", "--out", dir.path().string()}).code,
            kExitOracleOrIo);
}

TEST(Cli, PlotOfEmptyOrMissingCampaign) {
  testing::TempDir dir;
  std::ofstream(dir.path() / "per_image.csv") << "id,success,queries,l0,final_loss\n";
  EXPECT_EQ(cli({"plot", "--campaign", dir.path().string()}).code, kExitOracleOrIo);
  EXPECT_EQ(cli({"plot", "--campaign", (dir.path() / "nowhere").string()}).code, kExitOracleOrIo);
}

TEST(Cli, CampaignPlotAndMatrixEndToEnd) {
  testing::TempDir dir;
  const fs::path data = fs::path(PIXLE_DATA_DIR) / "digits3";
  const std::string oracle = "linear:" + (data / "model.pixlw").string();
  const std::vector<std::string> base = {"campaign", "--oracle", oracle, "--manifest",
                                         (data / "manifest.csv").string(), "--per-class", "3", "--restarts", "20"};
  auto first = base, second = base;
  first.insert(first.end(), {"--out", (dir.path() / "a").string()});
  second.insert(second.end(), {"--out", (dir.path() / "b").string(), "--workers", "3"});
  const auto ra = cli(first);
  ASSERT_EQ(ra.code, kExitSuccess) << ra.err;
  ASSERT_EQ(cli(second).code, kExitSuccess);
  EXPECT_EQ(slurp(dir.path() / "a" / "per_image.csv"), slurp(dir.path() / "b" / "per_image.csv"));
  EXPECT_EQ(read_csv(dir.path() / "a" / "per_image.csv", "id,success,queries,l0,final_loss").size(), 9u);
  for (const auto& entry : fs::directory_iterator(dir.path() / "a" / "trajectories")) {
    EXPECT_EQ(slurp(entry.path()), slurp(dir.path() / "b" / "trajectories" / entry.path().filename()));
  }

  const auto plot = cli({"plot", "--campaign", (dir.path() / "a").string()});
  EXPECT_EQ(plot.code, kExitSuccess) << plot.err;
  EXPECT_TRUE(fs::exists(dir.path() / "a" / "plot" / "remaining.csv"));
  EXPECT_EQ(load_campaign_traces(dir.path() / "a").size(), 9u);

  const auto matrix = cli({"matrix", "--oracle", oracle, "--manifest", (data / "manifest.csv").string(), "--quota",
                           "1", "--restarts", "20", "--out", (dir.path() / "m").string()});
  EXPECT_EQ(matrix.code, kExitSuccess) << matrix.err;
  EXPECT_TRUE(fs::exists(dir.path() / "m" / "matrix.json"));
  EXPECT_EQ(read_csv(dir.path() / "m" / "matrix_records.csv", "source,target,id,success,queries,l0,final_loss").size(),
            6u);
}

TEST(Cli, CampaignWithFailingOracleExitsTwo) {
  testing::TempDir dir;
  ImageTensor img(1, 4, 4, 0.1f);
  img.set(0, 0, 0, 0.9f);
  save_png(dir.path() / "a.png", img);
  save_png(dir.path() / "b.png", img);
  std::ofstream(dir.path() / "manifest.csv") << "id,path,label\na,a.png,0\nb,b.png,0\n";
  // The server answers the two selection queries plus one attack query, then exits.
  const std::string oracle = std::string("process:") + PIXLE_FAKE_SERVER + " --exit-after 3";
  const auto r = cli({"campaign", "--oracle", oracle, "--manifest", (dir.path() / "manifest.csv").string(), "--out",
                      (dir.path() / "out").string(), "--no-early-stop"});
  EXPECT_EQ(r.code, kExitOracleOrIo) << r.out << r.err;
  EXPECT_NE(r.err.find("2 items failed"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir.path() / "out" / "report.json"));
}

}  // namespace
}  // namespace pixle

#include "pixle/cli.hpp"

#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "pixle/harness.hpp"
#include "pixle/oracle.hpp"
#include "pixle/plot.hpp"
#include "pixle/png_io.hpp"
#include "pixle/search.hpp"

namespace pixle {

namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_interrupt(int) { g_interrupted.store(true); }

struct AttackFlags {
  std::string algorithm = "restart";
  std::size_t restarts = 100;
  std::size_t iterations = 50;
  std::size_t patch_min = 3;
  std::size_t patch_max = 3;
  std::string mapping = "random";
  std::string mode = "overwrite";
  std::uint64_t seed = 0;
  bool no_early_stop = false;

  AttackConfig to_config() const {
    AttackConfig c;
    c.algorithm = parse_search_algorithm(algorithm);
    c.restarts = restarts;
    c.iterations = iterations;
    c.patch_min = patch_min;
    c.patch_max = patch_max;
    c.mapping = parse_mapping_kind(mapping);
    c.transfer = parse_transfer_mode(mode);
    c.seed = seed;
    c.early_stop = !no_early_stop;
    c.validate();
    return c;
  }
};

void add_attack_flags(CLI::App& cmd, AttackFlags& f) {
  cmd.add_option("--algorithm", f.algorithm, "Search loop")
      ->check(CLI::IsMember({"restart", "iterative"}));
  cmd.add_option("--restarts", f.restarts, "Restarts R (restart algorithm)");
  cmd.add_option("--iters", f.iterations, "Iterations T per restart, or total for iterative");
  cmd.add_option("--patch-min", f.patch_min, "Smallest patch side")->check(CLI::PositiveNumber);
  cmd.add_option("--patch-max", f.patch_max, "Largest patch side")->check(CLI::PositiveNumber);
  cmd.add_option("--mapping", f.mapping, "Mapping function")
      ->check(CLI::IsMember({"random", "similarity", "distance", "similarity-dist", "distance-dist"}));
  cmd.add_option("--mode", f.mode, "Pixel transfer mode")->check(CLI::IsMember({"overwrite", "swap"}));
  cmd.add_option("--seed", f.seed, "RNG seed (falls back to $PIXLE_SEED)")->envname("PIXLE_SEED");
  cmd.add_flag("--no-early-stop", f.no_early_stop, "Keep searching after the goal is reached");
}

void write_json(const fs::path& path, const nlohmann::json& doc) {
  std::ofstream out(path);
  out << doc.dump(2) << '\n';
  if (!out) throw DatasetError("cannot write " + path.string());
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pixle: black-box L0 attacks that rearrange pixels"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  std::string oracle_spec;
  std::string out_dir = "pixle_out";
  std::size_t workers = 1;

  // attack
  auto* attack = app.add_subcommand("attack", "Attack a single image");
  AttackFlags attack_flags;
  std::string image_path;
  std::size_t label = 0;
  std::optional<std::size_t> target;
  attack->add_option("--oracle", oracle_spec, "builtin:NAME | linear:PATH | process:CMD | tcp:ADDR")->required();
  attack->add_option("--image", image_path, "PNG to attack")->required();
  attack->add_option("--label", label, "True class of the image")->required();
  attack->add_option("--target", target, "Target class for a targeted attack");
  attack->add_option("--out", out_dir, "Output directory");
  add_attack_flags(*attack, attack_flags);

  // campaign
  auto* campaign = app.add_subcommand("campaign", "Attack every selected image of a dataset");
  AttackFlags campaign_flags;
  std::string manifest;
  std::size_t per_class = 100;
  campaign->add_option("--oracle", oracle_spec, "builtin:NAME | linear:PATH | process:CMD | tcp:ADDR")->required();
  campaign->add_option("--manifest", manifest, "CSV manifest (id,path,label)")->required();
  campaign->add_option("--per-class", per_class, "Correctly classified images kept per class (0: all)");
  campaign->add_option("--workers", workers, "Parallel attacks for concurrent-safe oracles")->check(CLI::PositiveNumber);
  campaign->add_option("--out", out_dir, "Output directory");
  add_attack_flags(*campaign, campaign_flags);

  // matrix
  auto* matrix = app.add_subcommand("matrix", "Targeted success matrix over all class pairs");
  AttackFlags matrix_flags;
  std::size_t quota = 20;
  matrix->add_option("--oracle", oracle_spec, "builtin:NAME | linear:PATH | process:CMD | tcp:ADDR")->required();
  matrix->add_option("--manifest", manifest, "CSV manifest (id,path,label)")->required();
  matrix->add_option("--quota", quota, "Images per (source, target) pair")->check(CLI::PositiveNumber);
  matrix->add_option("--workers", workers, "Parallel attacks for concurrent-safe oracles")->check(CLI::PositiveNumber);
  matrix->add_option("--out", out_dir, "Output directory");
  add_attack_flags(*matrix, matrix_flags);

  // plot
  auto* plot = app.add_subcommand("plot", "Emit loss and remaining-image series for a campaign");
  std::string campaign_dir;
  std::string plot_out;
  plot->add_option("--campaign", campaign_dir, "Campaign output directory")->required();
  plot->add_option("--out", plot_out, "Plot output directory (default: <campaign>/plot)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitSuccess;
  } catch (const CLI::ParseError& e) {
    err << "pixle: " << e.what() << "\n\n";
    const CLI::App* sub = nullptr;
    for (const auto* s : app.get_subcommands()) sub = s;
    err << (sub != nullptr ? sub->help() : app.help());
    return kExitUsage;
  }

  // Flag validation happens here, before any oracle is contacted.
  AttackConfig config;
  try {
    if (*attack) config = attack_flags.to_config();
    if (*campaign) config = campaign_flags.to_config();
    if (*matrix) config = matrix_flags.to_config();
    if (!oracle_spec.empty()) parse_oracle_spec(oracle_spec);
  } catch (const Error& e) {
    err << "pixle: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*attack) {
      const ImageTensor image = load_png(image_path);
      auto oracle = make_oracle(oracle_spec);
      const AttackGoal goal = target ? AttackGoal::targeted(label, *target) : AttackGoal::untargeted(label);
      try {
        goal.validate(oracle->num_classes());
      } catch (const ConfigError& e) {
        err << "pixle: " << e.what() << '\n';
        return kExitUsage;
      }
      const AttackOutcome outcome = run_attack(image, goal, *oracle, config);

      fs::create_directories(out_dir);
      const std::string stem = fs::path(image_path).stem().string();
      save_png(fs::path(out_dir) / (stem + "_adv.png"), outcome.adversarial);
      write_trajectory_csv(fs::path(out_dir) / (stem + "_trajectory.csv"), outcome.trajectory);
      nlohmann::json doc = to_json(outcome);
      doc["id"] = stem;
      doc["label"] = label;
      doc["target"] = target ? nlohmann::json(*target) : nlohmann::json(nullptr);
      doc["config_echo"] = to_json(config);
      write_json(fs::path(out_dir) / (stem + "_outcome.json"), doc);

      out << (outcome.success ? "success" : "failure") << " queries=" << outcome.queries
          << " l0=" << outcome.l0 << " final_loss=" << outcome.final_loss << '\n';
      return outcome.success ? kExitSuccess : kExitAttackFailed;
    }

    if (*campaign || *matrix) {
      g_interrupted.store(false);
      auto previous = std::signal(SIGINT, on_interrupt);
      auto restore = [&] { std::signal(SIGINT, previous); };

      LabeledDataset dataset = load_manifest(manifest);
      auto oracle = make_oracle(oracle_spec);
      if (dataset.class_count > oracle->num_classes()) {
        restore();
        err << "pixle: manifest labels exceed the oracle's " << oracle->num_classes() << " classes\n";
        return kExitUsage;
      }
      dataset.class_count = oracle->num_classes();
      CampaignOptions options{workers, fs::path(out_dir), &g_interrupted};

      if (*matrix) {
        const TargetedMatrix m = run_targeted_matrix(dataset, *oracle, config, quota, options);
        restore();
        out << "targeted success " << m.overall_success_rate() << "% over " << m.class_count
            << " classes\n";
        return g_interrupted ? kExitInterrupted : kExitSuccess;
      }

      const std::size_t keep = per_class == 0 ? dataset.items.size() : per_class;
      const Selection sel = select_correctly_classified(dataset, *oracle, keep);
      for (const auto& w : sel.warnings) err << "pixle: " << w << '\n';
      const CampaignReport report = run_campaign(sel.dataset, *oracle, config, options);
      restore();
      out << "attacked " << report.per_image.size() << " images, success rate "
          << report.success_rate << "%";
      if (report.iterations) out << ", iterations " << report.iterations->mean << " +- " << report.iterations->std;
      if (report.l0) out << ", l0 " << report.l0->mean << " +- " << report.l0->std;
      out << '\n';
      if (report.interrupted) return kExitInterrupted;
      if (report.failed_items() > 0) {
        err << "pixle: " << report.failed_items() << " items failed\n";
        return kExitOracleOrIo;
      }
      return kExitSuccess;
    }

    if (*plot) {
      const fs::path dest = plot_out.empty() ? fs::path(campaign_dir) / "plot" : fs::path(plot_out);
      const auto runs = load_campaign_traces(campaign_dir);
      write_plot_outputs(runs, dest);
      out << "wrote plot data for " << runs.size() << " runs to " << dest.string() << '\n';
      return kExitSuccess;
    }
  } catch (const ConfigError& e) {
    err << "pixle: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "pixle: " << e.what() << '\n';
    return kExitOracleOrIo;
  }
  return kExitUsage;
}

}  // namespace pixle

// Command-line front end over the vitreg C API.

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vitreg/vitreg.h"

namespace {

using nlohmann::json;

int run(const std::string& command, const json& request) {
  char* summary = nullptr;
  const vitreg_status status = vitreg_run(command.c_str(), request.dump().c_str(), &summary);
  if (status != VITREG_OK) {
    std::fprintf(stderr, "error: %s\n", vitreg_last_error());
    return vitreg_status_exit_code(status);
  }
  std::printf("%s\n", summary);
  vitreg_string_free(summary);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chest radiograph severity-score regression with a vision transformer"};
  app.set_version_flag("--version", std::string(vitreg_version()));
  app.require_subcommand(1);

  json request = json::object();
  std::string command;
  std::string out;
  std::uint64_t seed = 0;
  int threads = 1;

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic radiograph dataset with per-lung scores");
  std::size_t n = 200;
  int size = 64;
  std::optional<int> height, width;
  double test_fraction = 0.0;
  synth->add_option("--n", n, "Number of samples")->capture_default_str();
  synth->add_option("--size", size, "Square image side in pixels")->capture_default_str();
  synth->add_option("--height", height, "Image height (overrides --size)");
  synth->add_option("--width", width, "Image width (overrides --size)");
  synth->add_option("--test-fraction", test_fraction, "Also write train.csv/test.csv with this test share")
      ->check(CLI::Range(0.0, 1.0));
  synth->add_option("--seed", seed, "Master seed")->capture_default_str();
  synth->add_option("--out", out, "Output directory")->required();

  // augment
  auto* augment = app.add_subcommand("augment", "Write an augmented copy of a manifest");
  std::string manifest;
  bool replace = false, cutmix = false, mixup = false, hflip = false;
  double lambda_min = 0.5, lambda_max = 0.9;
  augment->add_option("--manifest", manifest, "Input manifest CSV")->required();
  augment->add_flag("--replace", replace, "Add lung-and-score replacement pairs (needs per-lung scores)");
  augment->add_flag("--cutmix", cutmix, "Add one score CutMix sample per input");
  augment->add_flag("--mixup", mixup, "Add one score MixUp sample per input");
  augment->add_flag("--hflip", hflip, "Add one mirrored sample per input");
  augment->add_option("--lambda-min", lambda_min, "Smallest retained fraction for CutMix/MixUp")->capture_default_str();
  augment->add_option("--lambda-max", lambda_max, "Largest retained fraction for CutMix/MixUp")->capture_default_str();
  augment->add_option("--seed", seed, "Master seed")->capture_default_str();
  augment->add_option("--out", out, "Output directory")->required();

  // train
  auto* train = app.add_subcommand("train", "Train a model from a JSON run configuration");
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> train_seed;
  std::string train_manifest, val_manifest;
  bool no_wall_time = false;
  train->add_option("--config", config_path, "Run configuration JSON file");
  train->add_option("--set", overrides, "Override a config key, e.g. --set train.epochs=10 (repeatable)");
  train->add_option("--seed", train_seed, "Master seed (overrides the config)");
  train->add_option("--train-manifest", train_manifest, "Training manifest (overrides data.train_manifest)");
  train->add_option("--val-manifest", val_manifest, "Validation manifest (overrides data.val_manifest)");
  train->add_option("--threads", threads, "Worker threads per batch; 1 gives the reference results")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  train->add_flag("--no-wall-time", no_wall_time, "Write 0 to the trace's seconds column for byte-stable traces");
  train->add_option("--out", out, "Output directory")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a manifest");
  std::string checkpoint;
  bool no_plots = false;
  std::optional<double> display_max;
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  eval->add_option("--manifest", manifest, "Test manifest CSV")->required();
  eval->add_flag("--no-plots", no_plots, "Skip SVG plots");
  eval->add_option("--display-max", display_max, "Clamp predictions to [0, value] in the scatter plot");
  eval->add_option("--out", out, "Output directory")->required();

  // attnmap
  auto* attnmap = app.add_subcommand("attnmap", "Render the CLS attention map of one image");
  std::string image, layer = "last", aggregation = "mean";
  int head = 0;
  attnmap->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  attnmap->add_option("--image", image, "PNG image")->required();
  attnmap->add_option("--layer", layer, "Encoder layer index or 'last'")->capture_default_str();
  attnmap->add_option("--aggregation", aggregation, "mean, single or rollout")
      ->capture_default_str()
      ->check(CLI::IsMember({"mean", "single", "rollout"}));
  attnmap->add_option("--head", head, "Head index for --aggregation single")->capture_default_str();
  attnmap->add_option("--out", out, "Output directory")->required();

  // report
  auto* report = app.add_subcommand("report", "Redraw plots from an existing report.json");
  std::string report_path;
  report->add_option("--report", report_path, "report.json written by eval")->required();
  report->add_option("--display-max", display_max, "Clamp predictions to [0, value] in the scatter plot");
  report->add_option("--out", out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (synth->parsed()) {
    command = "synth";
    request = {{"n", n},       {"height", height.value_or(size)}, {"width", width.value_or(size)},
               {"seed", seed}, {"out", out},                      {"test_fraction", test_fraction}};
  } else if (augment->parsed()) {
    command = "augment";
    request = {{"manifest", manifest}, {"out", out},          {"seed", seed},
               {"replace", replace},   {"cutmix", cutmix},    {"mixup", mixup},
               {"hflip", hflip},       {"lambda_min", lambda_min}, {"lambda_max", lambda_max}};
  } else if (train->parsed()) {
    command = "train";
    if (train_seed) overrides.insert(overrides.begin(), "seed=" + std::to_string(*train_seed));
    if (!train_manifest.empty()) overrides.push_back("data.train_manifest=" + json(train_manifest).dump());
    if (!val_manifest.empty()) overrides.push_back("data.val_manifest=" + json(val_manifest).dump());
    request = {{"overrides", overrides}, {"threads", threads}, {"out", out}, {"record_wall_time", !no_wall_time}};
    if (!config_path.empty()) request["config_path"] = config_path;
  } else if (eval->parsed()) {
    command = "eval";
    request = {{"checkpoint", checkpoint}, {"manifest", manifest}, {"out", out}, {"plots", !no_plots}};
    if (display_max) request["display_max"] = *display_max;
  } else if (attnmap->parsed()) {
    command = "attnmap";
    request = {{"checkpoint", checkpoint}, {"image", image},   {"out", out},
               {"layer", layer},           {"aggregation", aggregation}, {"head", head}};
  } else {
    command = "report";
    request = {{"report", report_path}, {"out", out}};
    if (display_max) request["display_max"] = *display_max;
  }
  return run(command, request);
}

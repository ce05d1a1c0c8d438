#include "vitreg/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "strict_json.hpp"
#include "vitreg/attention.hpp"
#include "vitreg/augment.hpp"
#include "vitreg/checkpoint.hpp"
#include "vitreg/config_json.hpp"
#include "vitreg/data.hpp"
#include "vitreg/error.hpp"
#include "vitreg/eval.hpp"
#include "vitreg/plot.hpp"
#include "vitreg/rng.hpp"
#include "vitreg/train.hpp"

namespace vitreg {

using nlohmann::json;
namespace fs = std::filesystem;
using detail::StrictObject;

namespace {

constexpr std::string_view kVersion = "1.0.0";

std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

fs::path make_out_dir(const std::string& out) {
  require(!out.empty(), ErrorKind::kArgument, "an output directory is required");
  std::error_code ec;
  fs::create_directories(out, ec);
  require(!ec && fs::is_directory(out), ErrorKind::kIo, "cannot create output directory '" + out + "'");
  return fs::path(out);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  require(f.good(), ErrorKind::kIo, "cannot write '" + path.string() + "'");
  f << text;
  f.flush();
  require(f.good(), ErrorKind::kIo, "failed writing '" + path.string() + "'");
}

json read_json_file(const fs::path& path, ErrorKind kind) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), kind, "cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  json j = json::parse(ss.str(), nullptr, false);
  require(!j.is_discarded(), kind, "'" + path.string() + "' is not valid JSON");
  return j;
}

void write_run_json(const fs::path& dir, std::string_view command, const json& resolved) {
  const json doc{{"command", command}, {"version", kVersion}, {"resolved", resolved}};
  write_text(dir / "run.json", doc.dump(2) + "\n");
}

ManifestRow to_row(const CxrSample& s, std::string image_path) {
  return ManifestRow{std::move(image_path), s.score_total, s.score_left, s.score_right, s.score_kind};
}

// 5-stop blue → cyan → green → yellow → red ramp.
std::array<float, 3> heat_color(double t) {
  static constexpr float kStops[5][3] = {{0, 0, 1}, {0, 1, 1}, {0, 1, 0}, {1, 1, 0}, {1, 0, 0}};
  t = std::clamp(t, 0.0, 1.0) * 4.0;
  const int i = std::min(3, static_cast<int>(t));
  const auto f = static_cast<float>(t - i);
  std::array<float, 3> c{};
  for (int k = 0; k < 3; ++k) c[k] = kStops[i][k] + f * (kStops[i + 1][k] - kStops[i][k]);
  return c;
}

void write_plots(const fs::path& dir, const EvalReport& report, std::optional<double> display_max) {
  write_cmc_svg(dir / "cmc.svg", report.cmc);
  write_histogram_svg(dir / "histogram.svg", report.histogram);
  write_scatter_svg(dir / "scatter.svg", report.predictions, display_max);
}

std::optional<double> optional_number(StrictObject& o, const std::string& key) {
  if (const json* v = o.sub(key)) {
    if (v->is_null()) return std::nullopt;
    require(v->is_number(), ErrorKind::kConfig, "'" + key + "' must be a number");
    return v->get<double>();
  }
  return std::nullopt;
}

// Preprocessing stored with a checkpoint, or defaults sized to the model.
PreprocessConfig checkpoint_preprocess(const LoadedCheckpoint& ck) {
  if (ck.meta.contains("preprocess")) return preprocess_config_from_json(ck.meta["preprocess"]);
  PreprocessConfig p;
  p.target_height = ck.weights.config.image_height;
  p.target_width = ck.weights.config.image_width;
  p.channels = ck.weights.config.channels;
  return p;
}

}  // namespace

json run_synth(const json& request) {
  std::size_t n = 200;
  int height = 64, width = 64;
  std::uint64_t seed = 0;
  std::string out;
  double test_fraction = 0.0;
  StrictObject o(request, "synth");
  o.get("n", n);
  o.get("height", height);
  o.get("width", width);
  o.get("seed", seed);
  o.get("out", out);
  o.get("test_fraction", test_fraction);
  o.finish();
  require(test_fraction >= 0.0 && test_fraction < 1.0, ErrorKind::kArgument, "test_fraction must lie in [0, 1)");

  const fs::path dir = make_out_dir(out);
  fs::create_directories(dir / "images");
  const auto samples = synth_dataset(n, SynthOptions{height, width}, seed);
  std::vector<ManifestRow> rows;
  for (const CxrSample& s : samples) {
    const std::string rel = "images/" + s.source_id + ".png";
    write_png(dir / rel, s.image);
    rows.push_back(to_row(s, rel));
  }
  write_manifest(dir / "manifest.csv", rows);

  json summary{{"samples", n}, {"manifest", (dir / "manifest.csv").string()}};
  if (test_fraction > 0.0) {
    const auto n_test = static_cast<std::size_t>(std::lround(test_fraction * static_cast<double>(n)));
    require(n_test >= 1 && n_test < n, ErrorKind::kArgument, "test_fraction leaves an empty train or test split");
    const auto cut = rows.begin() + static_cast<std::ptrdiff_t>(n - n_test);
    write_manifest(dir / "train.csv", {rows.begin(), cut});
    write_manifest(dir / "test.csv", {cut, rows.end()});
    summary["train"] = n - n_test;
    summary["test"] = n_test;
  }
  write_run_json(dir, "synth",
                 {{"n", n}, {"height", height}, {"width", width}, {"seed", seed}, {"out", out},
                  {"test_fraction", test_fraction}});
  return summary;
}

json run_augment(const json& request) {
  std::string manifest, out;
  std::uint64_t seed = 0;
  bool replace = false, cutmix = false, mixup = false, flip = false;
  CutMixParams params;
  StrictObject o(request, "augment");
  o.get("manifest", manifest);
  o.get("out", out);
  o.get("seed", seed);
  o.get("replace", replace);
  o.get("cutmix", cutmix);
  o.get("mixup", mixup);
  o.get("hflip", flip);
  o.get("lambda_min", params.lambda_min);
  o.get("lambda_max", params.lambda_max);
  o.finish();
  require(!manifest.empty(), ErrorKind::kArgument, "augment needs an input manifest");
  params.rng_seed = seed;
  if (cutmix || mixup) params.validate();

  const std::vector<CxrSample> base = load_manifest(manifest);
  require(!base.empty(), ErrorKind::kAugmentation, "manifest '" + manifest + "' has no rows");
  std::vector<CxrSample> result = base;
  std::vector<std::string> how(base.size(), "original");

  if (replace) {
    auto expanded = expand_dataset(base, derive_seed(seed, SeedStream::kAugment, 0));
    for (std::size_t i = base.size(); i < expanded.size(); ++i) {
      result.push_back(std::move(expanded[i]));
      how.emplace_back("replace");
    }
  }
  if (cutmix) {
    Rng rng(derive_seed(seed, SeedStream::kAugment, 1));
    for (const CxrSample& a : base) {
      const CxrSample& b = base[rng.below(base.size())];
      result.push_back(score_cutmix(a, b, params, rng).sample);
      how.emplace_back("cutmix");
    }
  }
  if (mixup) {
    Rng rng(derive_seed(seed, SeedStream::kAugment, 2));
    for (const CxrSample& a : base) {
      const CxrSample& b = base[rng.below(base.size())];
      const double lambda = rng.uniform(params.lambda_min, params.lambda_max);
      result.push_back(score_mixup(a, b, lambda));
      how.emplace_back("mixup");
    }
  }
  if (flip) {
    for (const CxrSample& a : base) {
      result.push_back(hflip(a));
      how.emplace_back("hflip");
    }
  }

  const fs::path dir = make_out_dir(out);
  fs::create_directories(dir / "images");
  std::vector<ManifestRow> rows;
  std::string provenance = "image_path,augmentation,source\n";
  for (std::size_t i = 0; i < result.size(); ++i) {
    char name[48];
    std::snprintf(name, sizeof(name), "images/aug_%06zu.png", i);
    write_png(dir / name, result[i].image);
    rows.push_back(to_row(result[i], name));
    provenance += std::string(name) + "," + how[i] + "," + result[i].source_id + "\n";
  }
  write_manifest(dir / "manifest.csv", rows);
  write_text(dir / "provenance.csv", provenance);
  write_run_json(dir, "augment",
                 {{"manifest", manifest}, {"out", out}, {"seed", seed}, {"replace", replace}, {"cutmix", cutmix},
                  {"mixup", mixup}, {"hflip", flip}, {"lambda_min", params.lambda_min},
                  {"lambda_max", params.lambda_max}});
  return {{"input", base.size()}, {"samples", result.size()}, {"manifest", (dir / "manifest.csv").string()}};
}

json run_train(const json& request) {
  std::string config_path, out;
  json config = json::object();
  std::vector<std::string> overrides;
  std::optional<int> threads;
  bool record_wall_time = true;
  StrictObject o(request, "train");
  o.get("config_path", config_path);
  if (const json* c = o.sub("config")) config = *c;
  if (const json* v = o.sub("overrides")) {
    require(v->is_array(), ErrorKind::kConfig, "'overrides' must be an array of key=value strings");
    for (const json& s : *v) {
      require(s.is_string(), ErrorKind::kConfig, "'overrides' must be an array of key=value strings");
      overrides.push_back(s.get<std::string>());
    }
  }
  if (const json* t = o.sub("threads")) {
    require(t->is_number_integer(), ErrorKind::kConfig, "'threads' must be an integer");
    threads = t->get<int>();
  }
  o.get("out", out);
  o.get("record_wall_time", record_wall_time);
  o.finish();

  json doc = config_path.empty() ? config : read_json_file(config_path, ErrorKind::kConfig);
  for (const std::string& a : overrides) apply_override(doc, a);
  if (threads) apply_override(doc, "train.threads=" + std::to_string(*threads));
  const RunConfig rc = run_config_from_json(doc);
  require(!rc.data.train_manifest.empty(), ErrorKind::kConfig, "'data.train_manifest' is required");

  const fs::path dir = make_out_dir(out);
  const auto train_set = load_manifest(rc.data.train_manifest);
  std::vector<CxrSample> val_set;
  if (!rc.data.val_manifest.empty()) val_set = load_manifest(rc.data.val_manifest);

  const TrainResult r = train(init_weights(rc.model, rc.seed), train_set, val_set, rc.train, rc.preprocess);

  std::string trace = "epoch,train_loss,val_mae,val_pc,seconds\n";
  for (const EpochRecord& e : r.trace.epochs) {
    trace += std::to_string(e.epoch) + "," + fmt(e.train_loss) + "," + fmt(e.val_mae) + "," + fmt(e.val_pc) + "," +
             fmt(record_wall_time ? e.seconds : 0.0) + "\n";
  }
  write_text(dir / "trace.csv", trace);

  json meta{{"seed", rc.seed},
            {"preprocess", to_json(rc.preprocess)},
            {"train", to_json(rc.train)},
            {"eval", to_json(rc.eval)}};
  meta["epoch"] = rc.train.epochs;
  save_checkpoint(r.final_weights, dir / "final.ckpt", meta);
  meta["epoch"] = r.best_epoch;
  save_checkpoint(r.best_weights, dir / "best.ckpt", meta);

  const json resolved = to_json(rc);
  write_run_json(dir, "train", {{"config", resolved}, {"out", out}, {"record_wall_time", record_wall_time}});
  const EpochRecord& last = r.trace.epochs.back();
  json summary{{"epochs", r.trace.epochs.size()}, {"best_epoch", r.best_epoch}, {"final_train_loss", last.train_loss}};
  summary["final_val_mae"] = last.val_mae ? json(*last.val_mae) : json(nullptr);
  summary["checkpoint"] = (dir / "best.ckpt").string();
  return summary;
}

json run_eval(const json& request) {
  std::string checkpoint, manifest, out;
  bool plots = true;
  std::optional<double> display_max;
  std::optional<EvalOptions> options;
  StrictObject o(request, "eval");
  o.get("checkpoint", checkpoint);
  o.get("manifest", manifest);
  o.get("out", out);
  o.get("plots", plots);
  display_max = optional_number(o, "display_max");
  if (const json* e = o.sub("eval")) options = eval_options_from_json(*e);
  o.finish();
  require(!checkpoint.empty(), ErrorKind::kArgument, "eval needs a checkpoint");
  require(!manifest.empty(), ErrorKind::kArgument, "eval needs a manifest");

  const LoadedCheckpoint ck = load_checkpoint(checkpoint);
  const PreprocessConfig pre = checkpoint_preprocess(ck);
  if (!options) options = ck.meta.contains("eval") ? eval_options_from_json(ck.meta["eval"]) : EvalOptions{};
  const auto test_set = load_manifest(manifest);
  const EvalReport report = evaluate(ck.weights, test_set, pre, *options);

  const fs::path dir = make_out_dir(out);
  write_text(dir / "report.json", to_json(report).dump(2) + "\n");
  std::string preds = "source_id,y_true,p_total,p_left,p_right\n";
  for (const PredictionRecord& p : report.predictions) {
    preds += p.source_id + "," + fmt(p.y_true) + "," + fmt(p.p_total) + "," + fmt(p.p_left) + "," + fmt(p.p_right) +
             "\n";
  }
  write_text(dir / "predictions.csv", preds);
  std::string cmc = "threshold,fraction\n";
  for (const CmcPoint& c : report.cmc) cmc += fmt(c.threshold) + "," + fmt(c.fraction) + "\n";
  write_text(dir / "cmc.csv", cmc);
  std::string hist = "bin_low,bin_high,count\n";
  for (const HistogramBin& b : report.histogram) {
    hist += fmt(b.low) + "," + fmt(b.high) + "," + std::to_string(b.count) + "\n";
  }
  write_text(dir / "histogram.csv", hist);
  if (plots) write_plots(dir, report, display_max);

  write_run_json(dir, "eval",
                 {{"checkpoint", checkpoint}, {"manifest", manifest}, {"out", out}, {"plots", plots},
                  {"display_max", display_max ? json(*display_max) : json(nullptr)},
                  {"preprocess", to_json(pre)}, {"eval", to_json(*options)}});
  return {{"n", report.n}, {"mae", report.mae}, {"pearson", report.pearson ? json(*report.pearson) : json(nullptr)}};
}

json run_attnmap(const json& request) {
  std::string checkpoint, image_path, out, aggregation = "mean";
  json layer = "last";
  int head = 0;
  StrictObject o(request, "attnmap");
  o.get("checkpoint", checkpoint);
  o.get("image", image_path);
  o.get("out", out);
  if (const json* l = o.sub("layer")) layer = *l;
  o.get("aggregation", aggregation);
  o.get("head", head);
  o.finish();
  require(!checkpoint.empty() && !image_path.empty(), ErrorKind::kArgument, "attnmap needs a checkpoint and an image");

  const LoadedCheckpoint ck = load_checkpoint(checkpoint);
  const VitConfig& mc = ck.weights.config;
  int layer_index = mc.depth - 1;
  if (layer.is_string() && layer.get<std::string>() != "last") {
    const std::string text = layer.get<std::string>();
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), layer_index);
    require(ec == std::errc() && ptr == text.data() + text.size(), ErrorKind::kArgument,
            "layer must be 'last' or an integer, got '" + text + "'");
  } else if (layer.is_number_integer()) {
    layer_index = layer.get<int>();
  } else {
    require(layer.is_string(), ErrorKind::kArgument, "layer must be 'last' or an integer");
  }
  AttentionAggregation agg;
  if (aggregation == "mean") {
    agg = AttentionAggregation::kMeanHeads;
  } else if (aggregation == "single") {
    agg = AttentionAggregation::kSingleHead;
  } else if (aggregation == "rollout") {
    agg = AttentionAggregation::kRollout;
  } else {
    fail(ErrorKind::kArgument, "unknown aggregation '" + aggregation + "' (mean, single, rollout)");
  }

  CxrSample sample;
  try {
    sample.image = read_png(image_path);
  } catch (const Error& e) {
    fail(ErrorKind::kIngest, e.what());
  }
  const AttentionMap map = extract_attention(ck.weights, preprocess(sample, checkpoint_preprocess(ck)), layer_index,
                                             agg, head);

  const Image& src = sample.image;
  const Image heat = upsample_map(map, std::max(src.height, map.rows), std::max(src.width, map.cols));
  const auto [lo_it, hi_it] = std::minmax_element(heat.pixels.begin(), heat.pixels.end());
  const double lo = *lo_it, span = *hi_it - *lo_it;
  Image colored(heat.height, heat.width, 3);
  for (int y = 0; y < heat.height; ++y) {
    for (int x = 0; x < heat.width; ++x) {
      const auto c = heat_color(span > 0 ? (heat.at(y, x) - lo) / span : 0.0);
      for (int k = 0; k < 3; ++k) colored.at(y, x, k) = c[k];
    }
  }
  const Image gray = resize_bilinear(src, heat.height, heat.width);
  Image overlay(heat.height, heat.width, 3);
  for (int y = 0; y < heat.height; ++y) {
    for (int x = 0; x < heat.width; ++x) {
      float g = 0.0f;
      for (int k = 0; k < gray.channels; ++k) g += gray.at(y, x, k);
      g /= static_cast<float>(gray.channels);
      for (int k = 0; k < 3; ++k) overlay.at(y, x, k) = 0.5f * g + 0.5f * colored.at(y, x, k);
    }
  }

  const fs::path dir = make_out_dir(out);
  write_png(dir / "heatmap.png", colored);
  write_png(dir / "overlay.png", overlay);

  double grid_mass = 0.0, left_mass = 0.0;
  json rows = json::array();
  for (int r = 0; r < map.rows; ++r) {
    json row = json::array();
    for (int c = 0; c < map.cols; ++c) {
      row.push_back(map.at(r, c));
      grid_mass += map.at(r, c);
      if (c < map.cols / 2) left_mass += map.at(r, c);
    }
    rows.push_back(row);
  }
  const json doc{{"rows", map.rows},
                 {"cols", map.cols},
                 {"layer", map.layer_index},
                 {"aggregation", aggregation},
                 {"head", agg == AttentionAggregation::kSingleHead ? json(head) : json(nullptr)},
                 {"cls_weight", map.cls_weight},
                 {"left_fraction", grid_mass > 0 ? left_mass / grid_mass : 0.0},
                 {"grid", rows}};
  write_text(dir / "attention.json", doc.dump(2) + "\n");
  write_run_json(dir, "attnmap",
                 {{"checkpoint", checkpoint}, {"image", image_path}, {"out", out}, {"layer", layer_index},
                  {"aggregation", aggregation}, {"head", head}});
  return {{"layer", map.layer_index}, {"left_fraction", doc["left_fraction"]}, {"cls_weight", map.cls_weight}};
}

json run_report(const json& request) {
  std::string report_path, out;
  StrictObject o(request, "report");
  o.get("report", report_path);
  o.get("out", out);
  const std::optional<double> display_max = optional_number(o, "display_max");
  o.finish();
  require(!report_path.empty(), ErrorKind::kArgument, "report needs a report.json path");
  const EvalReport report = eval_report_from_json(read_json_file(report_path, ErrorKind::kEvaluation));
  const fs::path dir = make_out_dir(out);
  write_plots(dir, report, display_max);
  write_run_json(dir, "report",
                 {{"report", report_path}, {"out", out},
                  {"display_max", display_max ? json(*display_max) : json(nullptr)}});
  return {{"n", report.n}, {"plots", {"cmc.svg", "histogram.svg", "scatter.svg"}}};
}

json run_command(std::string_view command, const json& request) {
  if (command == "synth") return run_synth(request);
  if (command == "augment") return run_augment(request);
  if (command == "train") return run_train(request);
  if (command == "eval") return run_eval(request);
  if (command == "attnmap") return run_attnmap(request);
  if (command == "report") return run_report(request);
  fail(ErrorKind::kArgument, "unknown command '" + std::string(command) + "'");
}

}  // namespace vitreg

#pragma once

#include <string_view>

#include <nlohmann/json.hpp>

namespace vitreg {

// File-level workflows behind the command-line tool. Each takes a request
// document, writes its artifacts plus a run.json echoing the resolved request
// into request["out"], and returns a short summary document.
//
// synth    {n, height, width, seed, out, test_fraction}
//          images/synth_NNNNN.png, manifest.csv, and train.csv/test.csv when
//          test_fraction > 0 (the last round(n·f) rows go to test).
// augment  {manifest, out, seed, replace, cutmix, mixup, hflip,
//           lambda_min, lambda_max}
//          originals plus every enabled augmentation, images/aug_NNNNNN.png,
//          manifest.csv, provenance.csv.
// train    {config, overrides, out, threads, record_wall_time}
//          final.ckpt, best.ckpt, trace.csv.
// eval     {checkpoint, manifest, out, plots, display_max, eval}
//          report.json, predictions.csv, cmc.csv, histogram.csv, *.svg.
// attnmap  {checkpoint, image, out, layer, aggregation, head}
//          heatmap.png, overlay.png, attention.json.
// report   {report, out, display_max}
//          cmc.svg, histogram.svg, scatter.svg from an existing report.json.
nlohmann::json run_synth(const nlohmann::json& request);
nlohmann::json run_augment(const nlohmann::json& request);
nlohmann::json run_train(const nlohmann::json& request);
nlohmann::json run_eval(const nlohmann::json& request);
nlohmann::json run_attnmap(const nlohmann::json& request);
nlohmann::json run_report(const nlohmann::json& request);

// Dispatches on the command name; unknown names raise Error(kArgument).
nlohmann::json run_command(std::string_view command, const nlohmann::json& request);

}  // namespace vitreg

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "vitreg/data.hpp"
#include "vitreg/eval.hpp"
#include "vitreg/model.hpp"
#include "vitreg/train.hpp"

namespace vitreg {

// JSON mappings. Parsing is strict: unknown keys and wrongly typed values
// raise Error(kConfig) naming the offending key; missing keys keep defaults.
nlohmann::json to_json(const VitConfig& config);
nlohmann::json to_json(const PreprocessConfig& config);
nlohmann::json to_json(const TrainConfig& config);
nlohmann::json to_json(const EvalOptions& options);

VitConfig vit_config_from_json(const nlohmann::json& j);
PreprocessConfig preprocess_config_from_json(const nlohmann::json& j);
TrainConfig train_config_from_json(const nlohmann::json& j);
EvalOptions eval_options_from_json(const nlohmann::json& j);

struct DataPaths {
  std::string train_manifest;
  std::string val_manifest;   // optional
  std::string test_manifest;  // optional
};

// Full configuration of a train/eval run.
//   {"seed": int, "model": {...}, "preprocess": {...}, "train": {...},
//    "eval": {...}, "data": {"train_manifest", "val_manifest", "test_manifest"}}
// The master seed feeds weight init and training; train JSON has no own seed.
struct RunConfig {
  std::uint64_t seed = 0;
  VitConfig model = VitConfig::toy();
  PreprocessConfig preprocess;
  TrainConfig train;
  EvalOptions eval;
  DataPaths data;
};

nlohmann::json to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j);

// Report documents. Pearson is null when undefined.
nlohmann::json to_json(const EvalReport& report);
EvalReport eval_report_from_json(const nlohmann::json& j);

// Applies "dotted.key=value" to a JSON document. The value is parsed as JSON
// when possible (numbers, booleans, arrays) and kept as a string otherwise.
void apply_override(nlohmann::json& doc, std::string_view assignment);

}  // namespace vitreg

#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "vitreg/eval.hpp"

namespace vitreg {

// Static SVG charts for evaluation reports.
void write_cmc_svg(const std::filesystem::path& path, const std::vector<CmcPoint>& curve);
void write_histogram_svg(const std::filesystem::path& path, const std::vector<HistogramBin>& bins);
// Predicted vs. true total score. Predictions are clamped to [0, display_max]
// for drawing only when display_max is set.
void write_scatter_svg(const std::filesystem::path& path, const std::vector<PredictionRecord>& predictions,
                       std::optional<double> display_max = std::nullopt);

}  // namespace vitreg

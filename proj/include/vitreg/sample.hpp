#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "vitreg/image.hpp"

namespace vitreg {

enum class ScoreKind { kGE, kLO, kBrixia, kCOVID, kSynthetic };

std::string_view score_kind_name(ScoreKind kind);
// Throws Error(kIngest) for unknown names.
ScoreKind parse_score_kind(std::string_view name);
// Inclusive global score range: GE/LO/synthetic [0,8], Brixia [0,18], COVID [0,6].
double score_max(ScoreKind kind);

// One radiograph with its global and (optionally) per-lung severity scores.
// "left"/"right" refer to image halves: columns [0, W/2) and [W/2, W).
struct CxrSample {
  Image image;  // H×W×C in [0,1]
  double score_total = 0.0;
  std::optional<double> score_left;
  std::optional<double> score_right;
  ScoreKind score_kind = ScoreKind::kSynthetic;
  std::string source_id;

  bool has_lung_scores() const { return score_left.has_value() && score_right.has_value(); }
};

}  // namespace vitreg

#include "vitreg/error.hpp"

namespace vitreg {

std::string_view error_module(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kShape:
    case ErrorKind::kCheckpoint:
      return "model_core";
    case ErrorKind::kAugmentation:
      return "augmentation";
    case ErrorKind::kIngest:
      return "data";
    case ErrorKind::kTraining:
      return "training";
    case ErrorKind::kEvaluation:
      return "evaluation";
    case ErrorKind::kArgument:
    case ErrorKind::kIo:
      break;
  }
  return "vitreg";
}

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return "config_error";
    case ErrorKind::kArgument: return "argument_error";
    case ErrorKind::kShape: return "shape_error";
    case ErrorKind::kCheckpoint: return "checkpoint_error";
    case ErrorKind::kIngest: return "ingest_error";
    case ErrorKind::kAugmentation: return "augmentation_error";
    case ErrorKind::kTraining: return "training_error";
    case ErrorKind::kEvaluation: return "evaluation_error";
    case ErrorKind::kIo: return "io_error";
  }
  return "error";
}

std::string Error::diagnostic() const {
  std::string out(error_module(kind_));
  out += '.';
  out += error_kind_name(kind_);
  out += ": ";
  out += what();
  return out;
}

}  // namespace vitreg

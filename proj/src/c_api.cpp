#include "vitreg/vitreg.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include <nlohmann/json.hpp>

#include "vitreg/attention.hpp"
#include "vitreg/checkpoint.hpp"
#include "vitreg/config_json.hpp"
#include "vitreg/error.hpp"
#include "vitreg/model.hpp"
#include "vitreg/pipeline.hpp"

struct vitreg_model {
  vitreg::VitWeights weights;
};

namespace {

using nlohmann::json;
using vitreg::ErrorKind;

thread_local std::string g_last_error;

vitreg_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return VITREG_ERR_CONFIG;
    case ErrorKind::kArgument: return VITREG_ERR_ARGUMENT;
    case ErrorKind::kShape: return VITREG_ERR_SHAPE;
    case ErrorKind::kCheckpoint: return VITREG_ERR_CHECKPOINT;
    case ErrorKind::kIngest: return VITREG_ERR_INGEST;
    case ErrorKind::kAugmentation: return VITREG_ERR_AUGMENTATION;
    case ErrorKind::kTraining: return VITREG_ERR_TRAINING;
    case ErrorKind::kEvaluation: return VITREG_ERR_EVALUATION;
    case ErrorKind::kIo: return VITREG_ERR_IO;
  }
  return VITREG_ERR_INTERNAL;
}

template <class F>
vitreg_status guarded(F&& body) {
  try {
    body();
    return VITREG_OK;
  } catch (const vitreg::Error& e) {
    g_last_error = e.diagnostic();
    return status_of(e.kind());
  } catch (const json::exception& e) {
    g_last_error = std::string("vitreg.config_error: ") + e.what();
    return VITREG_ERR_CONFIG;
  } catch (const std::bad_alloc&) {
    g_last_error = "vitreg.internal_error: out of memory";
    return VITREG_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = std::string("vitreg.internal_error: ") + e.what();
    return VITREG_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  vitreg::require(p != nullptr, ErrorKind::kArgument, std::string(what) + " must not be NULL");
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

json parse_json(const char* text, ErrorKind kind) {
  json j = json::parse(text, nullptr, false);
  vitreg::require(!j.is_discarded(), kind, "request is not valid JSON");
  return j;
}

vitreg::Image image_view(const vitreg::VitConfig& c, const float* data) {
  vitreg::Image img(c.image_height, c.image_width, c.channels);
  std::memcpy(img.pixels.data(), data, img.pixels.size() * sizeof(float));
  return img;
}

}  // namespace

extern "C" {

const char* vitreg_version(void) { return "1.0.0"; }

const char* vitreg_last_error(void) { return g_last_error.c_str(); }

const char* vitreg_status_name(vitreg_status status) {
  switch (status) {
    case VITREG_OK: return "ok";
    case VITREG_ERR_CONFIG: return "config_error";
    case VITREG_ERR_ARGUMENT: return "argument_error";
    case VITREG_ERR_SHAPE: return "shape_error";
    case VITREG_ERR_CHECKPOINT: return "checkpoint_error";
    case VITREG_ERR_INGEST: return "ingest_error";
    case VITREG_ERR_AUGMENTATION: return "augmentation_error";
    case VITREG_ERR_TRAINING: return "training_error";
    case VITREG_ERR_EVALUATION: return "evaluation_error";
    case VITREG_ERR_IO: return "io_error";
    case VITREG_ERR_INTERNAL: return "internal_error";
  }
  return "unknown";
}

int vitreg_status_exit_code(vitreg_status status) {
  switch (status) {
    case VITREG_OK: return 0;
    case VITREG_ERR_CONFIG:
    case VITREG_ERR_ARGUMENT:
    case VITREG_ERR_SHAPE:
    case VITREG_ERR_INGEST:
    case VITREG_ERR_AUGMENTATION: return 1;
    default: return 2;
  }
}

void vitreg_string_free(char* text) { std::free(text); }

vitreg_status vitreg_model_create(const char* config_json, uint64_t seed, vitreg_model** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    vitreg::VitConfig config = vitreg::VitConfig::toy();
    if (config_json != nullptr && *config_json != '\0') {
      config = vitreg::vit_config_from_json(parse_json(config_json, ErrorKind::kConfig));
    }
    *out = new vitreg_model{vitreg::init_weights(config, seed)};
  });
}

vitreg_status vitreg_model_load(const char* path, vitreg_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    *out = new vitreg_model{vitreg::load_checkpoint(path).weights};
  });
}

vitreg_status vitreg_model_save(const vitreg_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    vitreg::save_checkpoint(model->weights, path);
  });
}

void vitreg_model_free(vitreg_model* model) { delete model; }

vitreg_status vitreg_model_config_json(const vitreg_model* model, char** out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = copy_string(vitreg::to_json(model->weights.config).dump());
  });
}

vitreg_status vitreg_model_input_shape(const vitreg_model* model, int* height, int* width, int* channels) {
  return guarded([&] {
    need(model, "model");
    const vitreg::VitConfig& c = model->weights.config;
    if (height) *height = c.image_height;
    if (width) *width = c.image_width;
    if (channels) *channels = c.channels;
  });
}

vitreg_status vitreg_model_parameter_count(const vitreg_model* model, size_t* count) {
  return guarded([&] {
    need(model, "model");
    need(count, "count");
    *count = model->weights.values.size();
  });
}

vitreg_status vitreg_model_get_parameters(const vitreg_model* model, float* values, size_t count) {
  return guarded([&] {
    need(model, "model");
    need(values, "values");
    vitreg::require(count == model->weights.values.size(), ErrorKind::kShape,
                    "parameter buffer holds " + std::to_string(count) + " values, model has " +
                        std::to_string(model->weights.values.size()));
    std::memcpy(values, model->weights.values.data(), count * sizeof(float));
  });
}

vitreg_status vitreg_model_set_parameters(vitreg_model* model, const float* values, size_t count) {
  return guarded([&] {
    need(model, "model");
    need(values, "values");
    vitreg::require(count == model->weights.values.size(), ErrorKind::kShape,
                    "parameter buffer holds " + std::to_string(count) + " values, model has " +
                        std::to_string(model->weights.values.size()));
    std::memcpy(model->weights.values.data(), values, count * sizeof(float));
  });
}

vitreg_status vitreg_model_forward(const vitreg_model* model, const float* images, size_t batch,
                                   vitreg_prediction* out) {
  return guarded([&] {
    need(model, "model");
    if (batch == 0) return;
    need(images, "images");
    need(out, "out");
    const vitreg::VitConfig& c = model->weights.config;
    const std::size_t stride = static_cast<std::size_t>(c.image_height) * c.image_width * c.channels;
    std::vector<vitreg::Image> inputs;
    inputs.reserve(batch);
    for (std::size_t b = 0; b < batch; ++b) inputs.push_back(image_view(c, images + b * stride));
    const auto preds = vitreg::forward(model->weights, inputs);
    for (std::size_t b = 0; b < batch; ++b) out[b] = {preds[b].p_left, preds[b].p_right, preds[b].p_total};
  });
}

vitreg_status vitreg_model_attention(const vitreg_model* model, const float* image, int layer,
                                     vitreg_attention_aggregation aggregation, int head, double* grid,
                                     size_t grid_len, double* cls_weight) {
  return guarded([&] {
    need(model, "model");
    need(image, "image");
    need(grid, "grid");
    vitreg::AttentionAggregation agg;
    switch (aggregation) {
      case VITREG_ATTENTION_MEAN_HEADS: agg = vitreg::AttentionAggregation::kMeanHeads; break;
      case VITREG_ATTENTION_SINGLE_HEAD: agg = vitreg::AttentionAggregation::kSingleHead; break;
      case VITREG_ATTENTION_ROLLOUT: agg = vitreg::AttentionAggregation::kRollout; break;
      default: vitreg::fail(ErrorKind::kArgument, "unknown attention aggregation");
    }
    const vitreg::VitConfig& c = model->weights.config;
    vitreg::require(grid_len == static_cast<std::size_t>(c.num_patches()), ErrorKind::kShape,
                    "attention grid needs " + std::to_string(c.num_patches()) + " values");
    const auto map = vitreg::extract_attention(model->weights, image_view(c, image), layer, agg, head);
    std::copy(map.grid.begin(), map.grid.end(), grid);
    if (cls_weight) *cls_weight = map.cls_weight;
  });
}

vitreg_status vitreg_run(const char* command, const char* request_json, char** summary_json) {
  return guarded([&] {
    need(command, "command");
    need(request_json, "request_json");
    if (summary_json) *summary_json = nullptr;
    const json summary = vitreg::run_command(command, parse_json(request_json, ErrorKind::kArgument));
    if (summary_json) *summary_json = copy_string(summary.dump());
  });
}

}  // extern "C"

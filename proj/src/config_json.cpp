#include "vitreg/config_json.hpp"

#include "strict_json.hpp"
#include "vitreg/error.hpp"

namespace vitreg {

using nlohmann::json;
using detail::StrictObject;

namespace {

std::string_view activation_name(HeadActivation a) { return a == HeadActivation::kGelu ? "gelu" : "identity"; }

HeadActivation parse_activation(const std::string& s) {
  if (s == "gelu") return HeadActivation::kGelu;
  if (s == "identity") return HeadActivation::kIdentity;
  fail(ErrorKind::kConfig, "unknown head_activation '" + s + "'");
}

}  // namespace

json to_json(const VitConfig& c) {
  return json{{"image_height", c.image_height}, {"image_width", c.image_width}, {"channels", c.channels},
              {"patch_size", c.patch_size},     {"depth", c.depth},             {"embed_dim", c.embed_dim},
              {"num_heads", c.num_heads},       {"mlp_hidden", c.mlp_hidden},   {"fc1_width", c.fc1_width},
              {"num_outputs", c.num_outputs},   {"head_activation", activation_name(c.head_activation)}};
}

VitConfig vit_config_from_json(const json& j) {
  VitConfig c = VitConfig::toy();
  StrictObject o(j, "model");
  o.get("image_height", c.image_height);
  o.get("image_width", c.image_width);
  o.get("channels", c.channels);
  o.get("patch_size", c.patch_size);
  o.get("depth", c.depth);
  o.get("embed_dim", c.embed_dim);
  o.get("num_heads", c.num_heads);
  const bool has_mlp = o.has("mlp_hidden");
  o.get("mlp_hidden", c.mlp_hidden);
  if (!has_mlp) c.mlp_hidden = 4 * c.embed_dim;
  o.get("fc1_width", c.fc1_width);
  o.get("num_outputs", c.num_outputs);
  std::string act(activation_name(c.head_activation));
  o.get("head_activation", act);
  c.head_activation = parse_activation(act);
  o.finish();
  c.validate();
  return c;
}

json to_json(const PreprocessConfig& c) {
  return json{{"target_height", c.target_height},
              {"target_width", c.target_width},
              {"channels", c.channels},
              {"normalize_mean", c.normalize_mean},
              {"normalize_std", c.normalize_std}};
}

PreprocessConfig preprocess_config_from_json(const json& j) {
  PreprocessConfig c;
  StrictObject o(j, "preprocess");
  o.get("target_height", c.target_height);
  o.get("target_width", c.target_width);
  o.get("channels", c.channels);
  for (const char* key : {"normalize_mean", "normalize_std"}) {
    auto& dst = std::string_view(key) == "normalize_mean" ? c.normalize_mean : c.normalize_std;
    if (const json* v = o.sub(key)) {
      if (v->is_number()) {
        dst.fill(v->get<float>());
      } else {
        require(v->is_array() && v->size() == 3, ErrorKind::kConfig,
                "'preprocess." + std::string(key) + "' must be a number or a 3-element array");
        for (std::size_t i = 0; i < 3; ++i) {
          require((*v)[i].is_number(), ErrorKind::kConfig, "'preprocess." + std::string(key) + "' must be numeric");
          dst[i] = (*v)[i].get<float>();
        }
      }
    }
  }
  o.finish();
  c.validate();
  return c;
}

json to_json(const TrainConfig& c) {
  return json{{"loss", loss_kind_name(c.loss.kind)},
              {"loss_delta", c.loss.delta},
              {"optimizer", optimizer_kind_name(c.optimizer.kind)},
              {"learning_rate", c.optimizer.learning_rate},
              {"momentum", c.optimizer.momentum},
              {"weight_decay", c.optimizer.weight_decay},
              {"batch_size", c.batch_size},
              {"epochs", c.epochs},
              {"online_cutmix", c.online_cutmix},
              {"cutmix_lambda_min", c.cutmix.lambda_min},
              {"cutmix_lambda_max", c.cutmix.lambda_max},
              {"offline_replacement", c.offline_replacement},
              {"shuffle", c.shuffle},
              {"threads", c.threads}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  StrictObject o(j, "train");
  std::string loss(loss_kind_name(c.loss.kind));
  std::string opt(optimizer_kind_name(c.optimizer.kind));
  o.get("loss", loss);
  o.get("loss_delta", c.loss.delta);
  o.get("optimizer", opt);
  o.get("learning_rate", c.optimizer.learning_rate);
  o.get("momentum", c.optimizer.momentum);
  o.get("weight_decay", c.optimizer.weight_decay);
  o.get("batch_size", c.batch_size);
  o.get("epochs", c.epochs);
  o.get("online_cutmix", c.online_cutmix);
  o.get("cutmix_lambda_min", c.cutmix.lambda_min);
  o.get("cutmix_lambda_max", c.cutmix.lambda_max);
  o.get("offline_replacement", c.offline_replacement);
  o.get("shuffle", c.shuffle);
  o.get("threads", c.threads);
  o.finish();
  c.loss.kind = parse_loss_kind(loss);
  c.optimizer.kind = parse_optimizer_kind(opt);
  c.validate();
  return c;
}

json to_json(const EvalOptions& e) {
  return json{{"cmc_thresholds", e.cmc_thresholds}, {"histogram_bins", e.histogram_bins}};
}

EvalOptions eval_options_from_json(const json& j) {
  EvalOptions e;
  StrictObject o(j, "eval");
  if (const json* t = o.sub("cmc_thresholds")) {
    require(t->is_array(), ErrorKind::kConfig, "'eval.cmc_thresholds' must be an array");
    e.cmc_thresholds.clear();
    for (const json& v : *t) {
      require(v.is_number(), ErrorKind::kConfig, "'eval.cmc_thresholds' must be numeric");
      e.cmc_thresholds.push_back(v.get<double>());
    }
  }
  o.get("histogram_bins", e.histogram_bins);
  o.finish();
  require(e.histogram_bins >= 1, ErrorKind::kConfig, "'eval.histogram_bins' must be >= 1");
  return e;
}

json to_json(const RunConfig& c) {
  return json{{"seed", c.seed},
              {"model", to_json(c.model)},
              {"preprocess", to_json(c.preprocess)},
              {"train", to_json(c.train)},
              {"eval", to_json(c.eval)},
              {"data",
               {{"train_manifest", c.data.train_manifest},
                {"val_manifest", c.data.val_manifest},
                {"test_manifest", c.data.test_manifest}}}};
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  StrictObject o(j, "");
  o.get("seed", c.seed);
  if (const json* m = o.sub("model")) c.model = vit_config_from_json(*m);
  if (const json* p = o.sub("preprocess")) {
    json filled = *p;
    if (!filled.contains("target_height")) filled["target_height"] = c.model.image_height;
    if (!filled.contains("target_width")) filled["target_width"] = c.model.image_width;
    if (!filled.contains("channels")) filled["channels"] = c.model.channels;
    c.preprocess = preprocess_config_from_json(filled);
  } else {
    c.preprocess.target_height = c.model.image_height;
    c.preprocess.target_width = c.model.image_width;
    c.preprocess.channels = c.model.channels;
  }
  require(c.preprocess.target_height == c.model.image_height && c.preprocess.target_width == c.model.image_width &&
              c.preprocess.channels == c.model.channels,
          ErrorKind::kConfig, "preprocess target size/channels must match the model input");
  if (const json* t = o.sub("train")) c.train = train_config_from_json(*t);
  if (const json* e = o.sub("eval")) c.eval = eval_options_from_json(*e);
  if (const json* d = o.sub("data")) {
    StrictObject dd(*d, "data");
    dd.get("train_manifest", c.data.train_manifest);
    dd.get("val_manifest", c.data.val_manifest);
    dd.get("test_manifest", c.data.test_manifest);
    dd.finish();
  }
  o.finish();
  c.train.seed = c.seed;
  return c;
}

json to_json(const EvalReport& r) {
  json cmc = json::array();
  for (const CmcPoint& c : r.cmc) cmc.push_back({{"threshold", c.threshold}, {"fraction", c.fraction}});
  json hist = json::array();
  for (const HistogramBin& b : r.histogram) hist.push_back({{"low", b.low}, {"high", b.high}, {"count", b.count}});
  json preds = json::array();
  for (const PredictionRecord& p : r.predictions) {
    preds.push_back({{"source_id", p.source_id},
                     {"y_true", p.y_true},
                     {"p_total", p.p_total},
                     {"p_left", p.p_left},
                     {"p_right", p.p_right}});
  }
  return json{{"n", r.n},
              {"mae", r.mae},
              {"pearson", r.pearson ? json(*r.pearson) : json(nullptr)},
              {"cmc", cmc},
              {"histogram", hist},
              {"predictions", preds}};
}

EvalReport eval_report_from_json(const json& j) {
  EvalReport r;
  try {
    r.n = j.at("n").get<std::size_t>();
    r.mae = j.at("mae").get<double>();
    if (!j.at("pearson").is_null()) r.pearson = j.at("pearson").get<double>();
    for (const json& c : j.at("cmc")) r.cmc.push_back({c.at("threshold").get<double>(), c.at("fraction").get<double>()});
    for (const json& b : j.at("histogram")) {
      r.histogram.push_back({b.at("low").get<double>(), b.at("high").get<double>(), b.at("count").get<std::size_t>()});
    }
    for (const json& p : j.at("predictions")) {
      r.predictions.push_back({p.at("source_id").get<std::string>(), p.at("y_true").get<double>(),
                               p.at("p_total").get<double>(), p.at("p_left").get<double>(),
                               p.at("p_right").get<double>()});
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::kEvaluation, std::string("malformed report: ") + e.what());
  }
  return r;
}

void apply_override(json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  require(eq != std::string_view::npos && eq > 0, ErrorKind::kConfig,
          "override '" + std::string(assignment) + "' is not of the form key=value");
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    require(!part.empty(), ErrorKind::kConfig, "override key '" + key + "' is malformed");
    if (!node->is_object()) *node = json::object();
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

}  // namespace vitreg

#include "wordfuse/run_config.hpp"

#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>

#include "wordfuse/error.hpp"

namespace wordfuse {
namespace {

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  unsigned long long out = 0;
  try {
    out = std::stoull(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty() || v[0] == '-') fail(ErrorKind::kConfig, key + " expects a non-negative integer, got '" + v + "'");
  return static_cast<std::size_t>(out);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty()) fail(ErrorKind::kConfig, key + " expects a number, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(ErrorKind::kConfig, key + " expects true or false, got '" + v + "'");
}

std::vector<std::size_t> to_sizes(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_size(key, item));
  if (out.empty()) fail(ErrorKind::kConfig, key + " expects a comma-separated list");
  return out;
}

struct Setting {
  const char* key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<nlohmann::json(const RunConfig&)> get;
};

#define WF_SIZE(KEY, FIELD)                                                         \
  Setting {                                                                         \
    KEY, [](RunConfig& c, const std::string& v) { c.FIELD = to_size(KEY, v); },     \
        [](const RunConfig& c) { return nlohmann::json(c.FIELD); }                  \
  }
#define WF_DOUBLE(KEY, FIELD)                                                       \
  Setting {                                                                         \
    KEY, [](RunConfig& c, const std::string& v) { c.FIELD = to_double(KEY, v); },   \
        [](const RunConfig& c) { return nlohmann::json(c.FIELD); }                  \
  }
#define WF_BOOL(KEY, FIELD)                                                         \
  Setting {                                                                         \
    KEY, [](RunConfig& c, const std::string& v) { c.FIELD = to_bool(KEY, v); },     \
        [](const RunConfig& c) { return nlohmann::json(c.FIELD); }                  \
  }

const std::vector<Setting>& settings() {
  static const std::vector<Setting> table = {
      WF_SIZE("model.hidden", model.hidden),
      WF_SIZE("model.shared_dim", model.shared_dim),
      WF_SIZE("model.filters", model.filters),
      Setting{"model.widths", [](RunConfig& c, const std::string& v) { c.model.widths = to_sizes("model.widths", v); },
              [](const RunConfig& c) { return nlohmann::json(c.model.widths); }},
      WF_DOUBLE("model.dropout", model.dropout),
      WF_BOOL("model.batch_norm", model.batch_norm),
      WF_BOOL("model.train_embeddings", model.train_embeddings),
      WF_SIZE("train.text_epochs", training.text_epochs),
      WF_SIZE("train.audio_epochs", training.audio_epochs),
      WF_SIZE("train.fusion_epochs", training.fusion_epochs),
      WF_SIZE("train.batch_size", training.base.batch_size),
      WF_DOUBLE("train.lr", training.base.adam.learning_rate),
      WF_DOUBLE("train.beta1", training.base.adam.beta1),
      WF_DOUBLE("train.beta2", training.base.adam.beta2),
      WF_DOUBLE("train.epsilon", training.base.adam.epsilon),
      WF_SIZE("train.patience", training.base.patience),
      WF_BOOL("train.freeze_branches", training.base.freeze_branches),
      WF_BOOL("train.stop_when_perfect", training.base.stop_when_train_perfect),
      WF_DOUBLE("split.test_fraction", split.test_fraction),
      WF_SIZE("split.folds", split.folds),
      WF_SIZE("split.fold", fold),
      WF_BOOL("split.speaker_independent", split.speaker_independent),
      WF_DOUBLE("mfsc.window_ms", features.mfsc.window_ms),
      WF_DOUBLE("mfsc.hop_ms", features.mfsc.hop_ms),
      WF_SIZE("mfsc.fft_size", features.mfsc.fft_size),
      WF_SIZE("mfsc.filters", features.mfsc.n_filters),
      WF_DOUBLE("mfsc.f_min", features.mfsc.f_min),
      WF_DOUBLE("mfsc.f_max", features.mfsc.f_max),
      WF_BOOL("mfsc.preemphasis", features.mfsc.preemphasis),
      WF_DOUBLE("mfsc.preemphasis_coefficient", features.mfsc.preemphasis_coefficient),
      WF_SIZE("mfsc.max_word_frames", features.max_word_frames),
      Setting{"embedding.path", [](RunConfig& c, const std::string& v) { c.features.embeddings = v; },
              [](const RunConfig& c) { return nlohmann::json(c.features.embeddings.string()); }},
      WF_SIZE("embedding.dim", features.embedding_dim),
      WF_SIZE("embedding.seed", features.embedding_seed),
      Setting{"align.mode",
              [](RunConfig& c, const std::string& v) {
                if (v != "dtw" && v != "timestamps") fail(ErrorKind::kConfig, "align.mode must be dtw or timestamps");
                c.align.mode = v;
              },
              [](const RunConfig& c) { return nlohmann::json(c.align.mode); }},
      WF_DOUBLE("align.radius", align.radius),
      Setting{"align.distance", [](RunConfig& c, const std::string& v) { c.align.distance = parse_distance(v); },
              [](const RunConfig& c) {
                switch (c.align.distance) {
                  case Distance::kSquaredEuclidean: return nlohmann::json("sqeuclidean");
                  case Distance::kManhattan: return nlohmann::json("manhattan");
                  default: return nlohmann::json("euclidean");
                }
              }},
  };
  return table;
}

#undef WF_SIZE
#undef WF_DOUBLE
#undef WF_BOOL

std::string json_scalar(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string out;
    for (const auto& x : v) out += (out.empty() ? "" : ",") + json_scalar(x);
    return out;
  }
  return v.dump();
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const auto& s : settings()) {
    if (key == s.key) {
      s.set(*this, value);
      sync();
      return;
    }
  }
  std::string known;
  for (const auto& s : settings()) known += std::string(known.empty() ? "" : ", ") + s.key;
  fail(ErrorKind::kConfig, "unknown setting '" + key + "' (known: " + known + ")");
}

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const auto& s : settings()) out.push_back(s.key);
  return out;
}

void RunConfig::set_epochs(std::size_t epochs) {
  training.text_epochs = training.audio_epochs = training.fusion_epochs = epochs;
}

void RunConfig::set_seed(std::uint64_t s) {
  seed = s;
  sync();
}

void RunConfig::sync() {
  model.bands = features.mfsc.n_filters;
  model.embedding_dim = features.embedding_dim;
  model.seed = seed;
  training.base.seed = seed;
  split.seed = seed;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json values = nlohmann::json::object();
  for (const auto& s : settings()) values[s.key] = s.get(*this);
  nlohmann::json j = {{"command", command},
                      {"seed", seed},
                      {"strategy", strategy_name(model.strategy)},
                      {"stage", stage ? stage_name(*stage) : "all"},
                      {"settings", values}};
  if (!manifest.empty()) j["manifest"] = manifest.string();
  if (!cache.empty()) j["cache"] = cache.string();
  if (!reference.empty()) j["reference"] = reference.string();
  if (!init.empty()) j["init"] = init.string();
  if (!checkpoints.empty()) {
    std::vector<std::string> paths;
    for (const auto& p : checkpoints) paths.push_back(p.string());
    j["checkpoints"] = paths;
  }
  return j;
}

void RunConfig::merge_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorKind::kConfig, "configuration must be a JSON object");
  static const std::set<std::string> top = {"command", "seed", "strategy", "stage", "settings", "manifest",
                                            "cache",   "reference", "init", "checkpoints"};
  for (const auto& [key, value] : j.items()) {
    if (!top.count(key)) fail(ErrorKind::kConfig, "unknown configuration field '" + key + "'");
  }
  try {
    if (j.contains("settings")) {
      for (const auto& [key, value] : j.at("settings").items()) set(key, json_scalar(value));
    }
    if (j.contains("seed")) set_seed(j.at("seed").get<std::uint64_t>());
    if (j.contains("strategy")) model.strategy = parse_strategy(j.at("strategy").get<std::string>());
    if (j.contains("stage")) {
      const auto s = j.at("stage").get<std::string>();
      stage = s == "all" ? std::nullopt : std::optional<Stage>(parse_stage(s));
    }
    if (j.contains("manifest")) manifest = j.at("manifest").get<std::string>();
    if (j.contains("cache")) cache = j.at("cache").get<std::string>();
    if (j.contains("reference")) reference = j.at("reference").get<std::string>();
    if (j.contains("init")) init = j.at("init").get<std::string>();
    if (j.contains("checkpoints")) {
      checkpoints.clear();
      for (const auto& p : j.at("checkpoints")) checkpoints.push_back(p.get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kConfig, std::string("configuration: ") + e.what());
  }
  sync();
}

std::filesystem::path default_cache_path() {
  const char* dir = std::getenv(kCacheDirEnv);
  if (!dir || !*dir) return {};
  return std::filesystem::path(dir) / "features.wfc";
}

}  // namespace wordfuse

#include "condense/pipeline/config.hpp"

#include <fstream>

#include "condense/error.hpp"

namespace condense {

#define CONDENSE_CONFIG_FIELDS(X)                                                             \
  X(train_path) X(valid_path) X(test_path) X(out) X(word_vectors) X(vocab_size)               \
  X(article_limit) X(summary_limit) X(strategy) X(k) X(beam) X(beam_groups) X(diversity)      \
  X(max_decode) X(emb_dim) X(enc_hidden) X(dec_hidden) X(att_dim) X(level_dim) X(cnn_windows) \
  X(cnn_filters) X(doc_hidden) X(ptr_hidden) X(max_steps) X(mask_repeats) X(lr_ml) X(lr_rl)   \
  X(batch_size) X(clip) X(gamma) X(whiten_advantages) X(abstractor_epochs)                    \
  X(extractor_epochs) X(rl_epochs) X(allow_cold_start) X(summarizer) X(eval_split) X(seed)    \
  X(workers)

nlohmann::json PipelineConfig::to_json() const {
  nlohmann::json j;
#define X(name) j[#name] = name;
  CONDENSE_CONFIG_FIELDS(X)
#undef X
  return j;
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  PipelineConfig c;
  const nlohmann::json known = c.to_json();
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "'");
    if (value.is_object()) throw ConfigError("config key '" + key + "' must not be nested");
  }
  try {
#define X(name) \
  if (j.contains(#name)) j.at(#name).get_to(c.name);
    CONDENSE_CONFIG_FIELDS(X)
#undef X
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::json PipelineConfig::overrides() const {
  const nlohmann::json defaults = PipelineConfig{}.to_json();
  const nlohmann::json current = to_json();
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [key, value] : current.items()) {
    if (defaults.at(key) != value) out[key] = value;
  }
  return out;
}

void PipelineConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(vocab_size, "vocab_size");
  positive(article_limit, "article_limit");
  positive(summary_limit, "summary_limit");
  positive(k, "k");
  positive(beam, "beam");
  positive(beam_groups, "beam_groups");
  positive(max_decode, "max_decode");
  positive(batch_size, "batch_size");
  positive(max_steps, "max_steps");
  positive(workers, "workers");
  positive(cnn_filters, "cnn_filters");
  if (cnn_windows.empty()) throw ConfigError("cnn_windows must not be empty");
  if (lr_ml <= 0 || lr_rl <= 0) throw ConfigError("learning rates must be positive");
  if (clip <= 0) throw ConfigError("clip must be positive");
  if (gamma < 0 || gamma > 1) throw ConfigError("gamma must lie in [0, 1]");
  if (diversity < 0) throw ConfigError("diversity must be non-negative");
  if (summarizer != "rl" && summarizer != "ml") throw ConfigError("summarizer must be rl or ml");
  if (eval_split != "train" && eval_split != "valid" && eval_split != "test") {
    throw ConfigError("eval_split must be train, valid or test");
  }
  if (out.empty()) throw ConfigError("output directory must be set");
}

}  // namespace condense

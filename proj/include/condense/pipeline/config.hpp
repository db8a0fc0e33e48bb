#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace condense {

/// Every knob of a pipeline run. Serialized as one flat JSON object; keys
/// match the field names.
struct PipelineConfig {
  std::string train_path;
  std::string valid_path;
  std::string test_path;
  std::string out = "run";
  std::string word_vectors;  // optional "token v1 ... vD" file

  std::size_t vocab_size = 30000;
  std::size_t article_limit = 100;
  std::size_t summary_limit = 30;

  std::string strategy = "compress-ctrl";
  std::size_t k = 2;
  std::size_t beam = 5;
  std::size_t beam_groups = 5;
  double diversity = 1.0;
  std::size_t max_decode = 30;

  std::size_t emb_dim = 128;
  std::size_t enc_hidden = 256;  // per direction
  std::size_t dec_hidden = 256;
  std::size_t att_dim = 256;
  std::size_t level_dim = 128;
  std::vector<std::size_t> cnn_windows{3, 4, 5};
  std::size_t cnn_filters = 100;
  std::size_t doc_hidden = 256;  // per direction
  std::size_t ptr_hidden = 256;
  std::size_t max_steps = 8;
  bool mask_repeats = true;

  double lr_ml = 5e-4;
  double lr_rl = 5e-5;
  std::size_t batch_size = 32;
  double clip = 2.0;
  double gamma = 0.95;
  bool whiten_advantages = false;
  std::size_t abstractor_epochs = 10;
  std::size_t extractor_epochs = 10;
  std::size_t rl_epochs = 10;
  bool allow_cold_start = false;
  std::string summarizer = "rl";  // "rl" or "ml" extractor checkpoint
  std::string eval_split = "test";

  std::uint64_t seed = 1;
  std::size_t workers = 1;

  nlohmann::json to_json() const;
  /// Starts from the defaults; unknown keys and wrong types raise ConfigError.
  static PipelineConfig from_json(const nlohmann::json& j);
  static PipelineConfig load(const std::string& path);

  /// Keys whose values differ from the defaults.
  nlohmann::json overrides() const;
  void validate() const;
};

}  // namespace condense

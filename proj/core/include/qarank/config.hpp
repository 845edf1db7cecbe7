#pragma once

#include <string>

#include "qarank/training.hpp"

namespace qarank {

/// Flat "key = value" run configuration ('#' starts a comment; unknown keys
/// are errors).
struct RunConfig {
  // model
  std::string variant = "lstm_max";
  std::string similarity = "cosine";
  double gesd_gamma = 1.0;
  double gesd_c = 1.0;
  std::size_t hidden_size = 141;
  std::size_t attention_dim = 0;  // 0 means 2H
  std::size_t filter_count = 1000;
  std::size_t filter_width = 2;
  std::size_t kmax = 1;
  bool trainable_embeddings = true;
  std::string att_query_pool = "auto";  // auto | avg | max

  TrainConfig train;

  // paths
  std::string embeddings_path;
  std::string data_format = "canonical";  // canonical | trecqa
  std::string train_questions, train_answers;
  std::string dev_questions, dev_answers;
  std::string test_questions, test_answers;
  std::string train_data, dev_data, test_data;  // trecqa single-file splits
  std::string checkpoint_dir = ".";
  std::string selection_metric = "top1";  // top1 | map | mrr

  void validate() const;
};

RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin);

// Round-trippable serialization (feeds the checkpoint's config echo).
std::string config_echo(const RunConfig& cfg);

}  // namespace qarank

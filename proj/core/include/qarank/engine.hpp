#pragma once

#include <string>
#include <vector>

#include "qarank/config.hpp"
#include "qarank/data.hpp"
#include "qarank/evaluation.hpp"
#include "qarank/model.hpp"

namespace qarank {

// Loads the embedding file named by cfg and builds a freshly initialized model
// for the configured variant. rng drives UNK and parameter initialization.
struct BuiltModel {
  Vocabulary vocab;
  ModelParams params;
};

BuiltModel build_model(const RunConfig& cfg, Rng& rng);

struct EvalOutput {
  std::vector<RankedPool> pools;
  std::vector<std::string> bucket_labels;  // parallel to pools
};

// Scores every pooled example; questions and answers truncated to max_length.
// Examples without a pool are an error for metric evaluation.
EvalOutput rank_dataset(const Dataset& data, const ModelParams& params,
                        std::size_t max_length);

double metric_value(const std::vector<RankedPool>& pools, const std::string& name);

// Bag-of-words baseline: rank each pool by cosine of idf-weighted embedding
// sums. Zero-norm vectors score 0 so the tie rule decides.
EvalOutput rank_dataset_bow(const Dataset& data, const EmbeddingTable& table,
                            const IdfTable& idf);

}  // namespace qarank

#pragma once

#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "qarank/tensor.hpp"

namespace qarank {

/// Candidate answers ordered by (score desc, answer-id asc).
struct RankedPool {
  std::string question_id;
  std::vector<std::pair<std::string, double>> ranked;
  std::unordered_set<std::string> ground_truth;
};

// Applies the deterministic tie rule; ground truths must all appear among the
// scored candidates.
RankedPool rank_pool(std::string question_id,
                     std::vector<std::pair<std::string, double>> scores,
                     std::unordered_set<std::string> ground_truth);

double top1_accuracy(const std::vector<RankedPool>& pools);
double average_precision(const RankedPool& pool);
double mean_average_precision(const std::vector<RankedPool>& pools);
double mean_reciprocal_rank(const std::vector<RankedPool>& pools);

struct BucketRow {
  std::string label;
  std::size_t count = 0;
  double accuracy = 0.0;
};

// One row per length bucket; labels must parallel pools.
std::vector<BucketRow> bucket_accuracy(const std::vector<RankedPool>& pools,
                                       const std::vector<std::string>& labels);

}  // namespace qarank

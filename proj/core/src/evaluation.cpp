#include "qarank/evaluation.hpp"

#include <algorithm>

#include "qarank/data.hpp"

namespace qarank {

RankedPool rank_pool(std::string question_id,
                     std::vector<std::pair<std::string, double>> scores,
                     std::unordered_set<std::string> ground_truth) {
  if (scores.empty()) throw Error("rank_pool: empty candidate list");
  if (ground_truth.empty()) throw Error("rank_pool: empty ground truth set");
  std::sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  for (const std::string& gt : ground_truth) {
    const bool present = std::any_of(scores.begin(), scores.end(),
                                     [&](const auto& s) { return s.first == gt; });
    if (!present) {
      throw Error("rank_pool: ground truth \"" + gt + "\" not among candidates");
    }
  }
  return {std::move(question_id), std::move(scores), std::move(ground_truth)};
}

double top1_accuracy(const std::vector<RankedPool>& pools) {
  if (pools.empty()) throw Error("top1_accuracy: no pools");
  std::size_t hits = 0;
  for (const RankedPool& p : pools) {
    if (p.ground_truth.count(p.ranked.front().first)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(pools.size());
}

double average_precision(const RankedPool& pool) {
  double sum = 0.0;
  std::size_t found = 0;
  for (std::size_t rank = 1; rank <= pool.ranked.size(); ++rank) {
    if (pool.ground_truth.count(pool.ranked[rank - 1].first)) {
      ++found;
      sum += static_cast<double>(found) / static_cast<double>(rank);
    }
  }
  return sum / static_cast<double>(pool.ground_truth.size());
}

double mean_average_precision(const std::vector<RankedPool>& pools) {
  if (pools.empty()) throw Error("mean_average_precision: no pools");
  double sum = 0.0;
  for (const RankedPool& p : pools) sum += average_precision(p);
  return sum / static_cast<double>(pools.size());
}

double mean_reciprocal_rank(const std::vector<RankedPool>& pools) {
  if (pools.empty()) throw Error("mean_reciprocal_rank: no pools");
  double sum = 0.0;
  for (const RankedPool& p : pools) {
    for (std::size_t rank = 1; rank <= p.ranked.size(); ++rank) {
      if (p.ground_truth.count(p.ranked[rank - 1].first)) {
        sum += 1.0 / static_cast<double>(rank);
        break;
      }
    }
  }
  return sum / static_cast<double>(pools.size());
}

std::vector<BucketRow> bucket_accuracy(const std::vector<RankedPool>& pools,
                                       const std::vector<std::string>& labels) {
  if (pools.size() != labels.size()) {
    throw Error("bucket_accuracy: pools and labels differ in length");
  }
  std::vector<BucketRow> rows;
  for (const std::string& label : bucket_labels()) rows.push_back({label, 0, 0.0});
  std::vector<std::size_t> hits(rows.size(), 0);
  for (std::size_t i = 0; i < pools.size(); ++i) {
    std::size_t b = 0;
    while (b < rows.size() && rows[b].label != labels[i]) ++b;
    if (b == rows.size()) throw Error("bucket_accuracy: unknown bucket \"" + labels[i] + "\"");
    ++rows[b].count;
    if (pools[i].ground_truth.count(pools[i].ranked.front().first)) ++hits[b];
  }
  for (std::size_t b = 0; b < rows.size(); ++b) {
    rows[b].accuracy = rows[b].count
                           ? static_cast<double>(hits[b]) / static_cast<double>(rows[b].count)
                           : 0.0;
  }
  return rows;
}

}  // namespace qarank

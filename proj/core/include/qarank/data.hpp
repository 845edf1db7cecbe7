#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "qarank/embeddings.hpp"
#include "qarank/tensor.hpp"

namespace qarank {

/// One question with its ground truths and (optionally) a candidate pool.
struct QAExample {
  std::string question_id;
  std::vector<int> question;               // token ids
  std::vector<std::string> ground_truth;   // nonempty
  std::vector<std::string> pool;           // empty when absent ('-' in the file)

  bool has_pool() const { return !pool.empty(); }
};

struct AnswerStore {
  std::unordered_map<std::string, std::vector<int>> answers;
  std::vector<std::string> ids;  // file order

  const std::vector<int>& tokens(const std::string& id) const;
};

/// PAD-filled id matrix with a prefix-ones mask, both B x L row-major.
struct TokenBatch {
  std::size_t batch = 0;
  std::size_t length = 0;
  std::vector<int> ids;
  std::vector<double> mask;

  std::vector<int> row_ids(std::size_t r) const {
    return {ids.begin() + static_cast<std::ptrdiff_t>(r * length),
            ids.begin() + static_cast<std::ptrdiff_t>((r + 1) * length)};
  }
};

struct Dataset {
  std::vector<QAExample> examples;
  AnswerStore store;
  std::size_t dropped_questions = 0;  // trecqa filter
};

// Canonical TSV: answers "<id>\t<tokens>"; questions
// "<id>\t<tokens>\t<gt-ids,comma>\t<pool-ids,comma or '-'>".
Dataset parse_canonical(const std::string& qpath, const std::string& apath,
                        const Vocabulary& vocab);

void write_canonical(const std::string& qpath, const std::string& apath,
                     const Dataset& data, const Vocabulary& vocab);

// TREC-style blocks separated by blank lines:
//   Q\t<question tokens>
//   <0|1>\t<candidate tokens>   (one line per candidate)
// Questions whose candidates are all-positive or all-negative are dropped and
// counted in Dataset::dropped_questions.
Dataset parse_trecqa(const std::string& path, const Vocabulary& vocab);

std::vector<int> truncate_tokens(const std::vector<int>& tokens, std::size_t max_len);

TokenBatch pack_batch(const std::vector<std::vector<int>>& seqs, std::size_t max_len);

struct Batch {
  std::vector<std::size_t> example_indices;
  TokenBatch questions;
};

// Deterministic shuffle, batches of B, final partial batch emitted as-is.
std::vector<Batch> make_batches(const std::vector<QAExample>& examples,
                                std::size_t batch_size, std::size_t max_len,
                                std::uint64_t shuffle_seed);

// Length buckets over average ground-truth answer length; upper bounds
// inclusive: 50,55,60,65,70,80,90,100,120,160, then open-ended.
constexpr std::size_t kNumBuckets = 11;
const std::vector<std::string>& bucket_labels();
std::size_t bucket_index(double avg_gt_length);
std::string bucket_of(const QAExample& example, const AnswerStore& store);

}  // namespace qarank

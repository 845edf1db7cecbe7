#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qarank/data.hpp"
#include "qarank/model.hpp"
#include "qarank/rng.hpp"

namespace qarank {

struct TrainConfig {
  std::size_t batch_size = 20;
  std::size_t max_length = 200;
  double margin = 0.2;
  double learning_rate = 0.05;
  double dropout = 0.3;
  std::size_t negatives = 50;  // resampling cap K; first nonzero-loss draw trains
  std::size_t epochs = 10;
  std::uint64_t seed = 1;

  void validate() const;
};

struct EpochStats {
  double mean_loss = 0.0;
  std::size_t examples = 0;  // (question, ground truth) instances processed
  std::size_t trained = 0;   // instances that produced a nonzero loss
  std::size_t skipped = 0;   // instances whose K draws all had zero loss
};

// Uniform over pool minus the question's ground truths.
std::string sample_negative(const QAExample& question,
                            const std::vector<std::string>& pool, Rng& rng);

// Inverted dropout: train mode keeps with prob 1-p and scales by 1/(1-p);
// eval mode returns all ones.
Vector dropout_mask(std::size_t dim, double p, Rng& rng, bool train);

// w <- w - lr * g for every trainable tensor; the PAD embedding row is never
// touched.
void sgd_step(ModelParams& params, GradientSet& grads, double learning_rate);

// One pass over the expanded (question, ground truth) instances in shuffled
// mini-batches; gradients averaged over the batch's trained instances.
// negative_pool is the answer-id space negatives are drawn from.
EpochStats train_epoch(const std::vector<QAExample>& examples,
                       const AnswerStore& store,
                       const std::vector<std::string>& negative_pool,
                       ModelParams& params, const TrainConfig& cfg, Rng& rng);

struct GradCheckEntry {
  std::string tensor;
  double max_rel_error = 0.0;
  std::size_t worst_coord = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;

  double max_rel_error() const;
  bool ok(double tolerance = 1e-4) const { return max_rel_error() <= tolerance; }
};

struct GradCheckSizes {
  std::size_t embed_dim = 4;
  std::size_t hidden = 5;
  std::size_t attention_dim = 6;
  std::size_t filters = 3;
  std::size_t filter_width = 2;
  std::size_t vocab = 12;
  std::size_t q_len = 5, pos_len = 6, neg_len = 7;
  std::size_t embedding_sample = 48;  // coordinates checked in the table
};

// Central differences (eps = 1e-4) against the analytic gradients of
// forward_loss at toy sizes, dropout disabled. The margin is chosen so the
// hinge is active (the loss is differentiable at the checked point), and the
// random checked point is resampled from derived sub-seeds while any sampled
// coordinate is degenerate for finite differences: gradient below the noise
// floor, or difference quotients at eps and 2*eps disagreeing (high
// curvature). Neither criterion looks at the analytic gradient.
// corrupt_tensor is a fault-injection hook for tests: when it names a tensor,
// that tensor's analytic gradient is perturbed before comparison.
GradCheckReport grad_check(ModelVariant variant, std::uint64_t seed,
                           const GradCheckSizes& sizes = {},
                           const std::string& corrupt_tensor = "");

// Builds a randomly initialized model for a variant (used by grad_check and
// tests).
ModelParams make_random_model(ModelVariant variant, std::size_t vocab,
                              std::size_t embed_dim, std::size_t hidden,
                              std::size_t attention_dim, std::size_t filters,
                              std::size_t filter_width, std::size_t kmax,
                              Rng& rng, double scale = 0.1);

}  // namespace qarank

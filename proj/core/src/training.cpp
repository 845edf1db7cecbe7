#include "qarank/training.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace qarank {

void TrainConfig::validate() const {
  if (batch_size < 1) throw Error("batch_size must be >= 1");
  if (max_length < 1) throw Error("max_length must be >= 1");
  if (margin <= 0.0) throw Error("margin must be > 0");
  if (dropout < 0.0 || dropout >= 1.0) throw Error("dropout must be in [0, 1)");
  if (negatives < 1) throw Error("negative_samples must be >= 1");
}

std::string sample_negative(const QAExample& question,
                            const std::vector<std::string>& pool, Rng& rng) {
  if (pool.empty()) throw Error("sample_negative: empty pool");
  std::unordered_set<std::string> gt(question.ground_truth.begin(),
                                     question.ground_truth.end());
  const bool any = std::any_of(pool.begin(), pool.end(),
                               [&](const std::string& id) { return !gt.count(id); });
  if (!any) {
    throw Error("sample_negative: no non-ground-truth answer available for question \"" +
                question.question_id + "\"");
  }
  for (;;) {
    const std::string& id = pool[rng.index(pool.size())];
    if (!gt.count(id)) return id;
  }
}

Vector dropout_mask(std::size_t dim, double p, Rng& rng, bool train) {
  Vector mask(dim, 1.0);
  if (!train || p == 0.0) return mask;
  const double scale = 1.0 / (1.0 - p);
  for (double& v : mask) v = rng.bernoulli(1.0 - p) ? scale : 0.0;
  return mask;
}

void sgd_step(ModelParams& params, GradientSet& grads, double learning_rate) {
  // PAD row stays exactly zero regardless of what was accumulated.
  for (std::size_t j = 0; j < grads.embeddings.cols; ++j) {
    grads.embeddings.at(Vocabulary::kPad, j) = 0.0;
  }
  for (const TensorRef& ref : tensor_refs(params, grads)) {
    for (std::size_t i = 0; i < ref.size; ++i) {
      ref.param[i] -= learning_rate * ref.grad[i];
    }
  }
}

namespace {

struct Instance {
  std::size_t example = 0;
  std::string gt_id;
};

}  // namespace

EpochStats train_epoch(const std::vector<QAExample>& examples,
                       const AnswerStore& store,
                       const std::vector<std::string>& negative_pool,
                       ModelParams& params, const TrainConfig& cfg, Rng& rng) {
  cfg.validate();
  if (examples.empty()) throw Error("train_epoch: empty training set");

  // A question with several ground truths becomes one instance per truth.
  std::vector<Instance> instances;
  for (std::size_t e = 0; e < examples.size(); ++e) {
    for (const std::string& gt : examples[e].ground_truth) {
      instances.push_back({e, gt});
    }
  }
  for (std::size_t i = instances.size(); i > 1; --i) {
    std::swap(instances[i - 1], instances[rng.index(i)]);
  }

  EpochStats stats;
  GradientSet batch_grads = GradientSet::zeros_like(params);
  GradientSet example_grads = GradientSet::zeros_like(params);
  double loss_sum = 0.0;

  for (std::size_t start = 0; start < instances.size(); start += cfg.batch_size) {
    const std::size_t end = std::min(start + cfg.batch_size, instances.size());

    std::vector<std::vector<int>> q_seqs, pos_seqs;
    for (std::size_t i = start; i < end; ++i) {
      q_seqs.push_back(truncate_tokens(examples[instances[i].example].question,
                                       cfg.max_length));
      pos_seqs.push_back(truncate_tokens(store.tokens(instances[i].gt_id),
                                         cfg.max_length));
    }
    const TokenBatch q_batch = pack_batch(q_seqs, cfg.max_length);
    const TokenBatch pos_batch = pack_batch(pos_seqs, cfg.max_length);

    batch_grads.clear();
    std::size_t trained_in_batch = 0;
    const std::size_t repr = representation_dim(params);

    for (std::size_t i = start; i < end; ++i) {
      const QAExample& ex = examples[instances[i].example];
      const std::vector<int> q_tokens = q_batch.row_ids(i - start);
      const std::vector<int> pos_tokens = pos_batch.row_ids(i - start);
      ++stats.examples;

      bool trained = false;
      for (std::size_t draw = 0; draw < cfg.negatives && !trained; ++draw) {
        const std::string neg_id = sample_negative(ex, negative_pool, rng);
        const std::vector<int> neg_tokens =
            truncate_tokens(store.tokens(neg_id), cfg.max_length);

        DropoutMasks masks;
        masks.q = dropout_mask(repr, cfg.dropout, rng, true);
        masks.pos = dropout_mask(repr, cfg.dropout, rng, true);
        masks.neg = dropout_mask(repr, cfg.dropout, rng, true);

        LossCache cache;
        const double loss = forward_loss(q_tokens, pos_tokens, neg_tokens, params,
                                         cfg.margin, &masks, &cache);
        if (loss > 0.0) {
          example_grads.clear();
          backward(cache, params, example_grads);
          batch_grads.add(example_grads);
          loss_sum += loss;
          ++trained_in_batch;
          ++stats.trained;
          trained = true;
        }
      }
      if (!trained) ++stats.skipped;
    }

    if (trained_in_batch > 0) {
      batch_grads.scale(1.0 / static_cast<double>(trained_in_batch));
      sgd_step(params, batch_grads, cfg.learning_rate);
    }
  }

  stats.mean_loss = stats.examples ? loss_sum / static_cast<double>(stats.examples) : 0.0;
  return stats;
}

double GradCheckReport::max_rel_error() const {
  double worst = 0.0;
  for (const GradCheckEntry& e : entries) worst = std::max(worst, e.max_rel_error);
  return worst;
}

ModelParams make_random_model(ModelVariant variant, std::size_t vocab,
                              std::size_t embed_dim, std::size_t hidden,
                              std::size_t attention_dim, std::size_t filters,
                              std::size_t filter_width, std::size_t kmax,
                              Rng& rng, double scale) {
  ModelParams p;
  p.variant = variant;
  p.embeddings.dim = embed_dim;
  p.embeddings.vectors = Matrix(vocab, embed_dim);
  for (std::size_t r = 1; r < vocab; ++r) {  // PAD row stays zero
    for (std::size_t j = 0; j < embed_dim; ++j) {
      p.embeddings.vectors.at(r, j) = rng.uniform(-scale, scale);
    }
  }
  p.bilstm = BiLstmParams::random(hidden, embed_dim, rng, scale);
  if (variant_uses_cnn(variant)) {
    p.cnn = CnnParams::random(filters, filter_width, 2 * hidden, kmax, rng,
                              scale);
  }
  if (variant_uses_attention(variant)) {
    const std::size_t d = attention_dim ? attention_dim : 2 * hidden;
    p.attention = AttentionParams::random(d, 2 * hidden, rng, scale);
  }
  return p;
}

GradCheckReport grad_check(ModelVariant variant, std::uint64_t seed,
                           const GradCheckSizes& sizes,
                           const std::string& corrupt_tensor) {
  const double eps = 1e-4;

  // Central differences resolve a gradient coordinate only down to roughly
  // loss_roundoff / (2*eps) ~ 2e-12 in absolute terms, and carry a
  // truncation error of order eps^2 times the local third derivative. A
  // coordinate whose true gradient sits near the 1e-8 denominator floor, or
  // whose curvature is large relative to its gradient, is therefore pure
  // noise against the 1e-4 tolerance even when the analytic value is exact.
  // Like breaking pooling ties, we perturb the checked point: derived
  // sub-seeds are tried until every (sampled) coordinate has a comfortably
  // measurable gradient and the difference quotients at eps and 2*eps agree.
  // Neither criterion consults the analytic gradient, so a wrong backward
  // pass cannot trigger resampling and is still reported.
  const double tolerance = 1e-4;
  const double measurable = 3e-8;
  const int max_attempts = 64;

  ModelParams params;
  std::vector<int> q, pos, neg;
  GradientSet grads;
  double margin = 0.5;
  GradCheckReport report;

  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    Rng rng(seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(attempt));
    params =
        make_random_model(variant, sizes.vocab, sizes.embed_dim, sizes.hidden,
                          sizes.attention_dim, sizes.filters,
                          sizes.filter_width, /*kmax=*/1, rng, /*scale=*/0.5);
    auto random_tokens = [&](std::size_t len) {
      std::vector<int> out(len);
      for (int& id : out) {
        id = static_cast<int>(1 + rng.index(sizes.vocab - 1));  // non-PAD
      }
      return out;
    };
    q = random_tokens(sizes.q_len);
    pos = random_tokens(sizes.pos_len);
    neg = random_tokens(sizes.neg_len);

    // Pick the margin so the hinge is strictly active with a small loss:
    // active keeps the loss smooth around the checked point, and a small
    // value keeps finite-difference roundoff (proportional to the loss
    // magnitude) low. Similarities are bounded, so the hinge is surely
    // active at margin 5 and loss(5) = 5 - sim_pos + sim_neg recovers the
    // similarity gap.
    const double at_five =
        forward_loss(q, pos, neg, params, 5.0, nullptr, nullptr);
    margin = 5.0 - at_five + 0.5;  // loss at the checked point becomes 0.5

    grads = GradientSet::zeros_like(params);
    LossCache cache;
    forward_loss(q, pos, neg, params, margin, nullptr, &cache);
    backward(cache, params, grads);

    bool degenerate = false;
    for (const TensorRef& ref : tensor_refs(params, grads)) {
      std::size_t stride = 1;
      if (ref.name == "embeddings" && ref.size > sizes.embedding_sample) {
        stride =
            (ref.size + sizes.embedding_sample - 1) / sizes.embedding_sample;
      }
      for (std::size_t i = 0; i < ref.size && !degenerate; i += stride) {
        const double g = std::fabs(ref.grad[i]);
        if (g > 0.0 && g < measurable) degenerate = true;
      }
      if (degenerate) break;
    }
    if (degenerate && attempt + 1 < max_attempts) continue;

    auto loss_at = [&]() {
      return forward_loss(q, pos, neg, params, margin, nullptr, nullptr);
    };

    report.entries.clear();
    bool unreliable = false;
    for (const TensorRef& ref : tensor_refs(params, grads)) {
      if (ref.name == corrupt_tensor) ref.grad[0] += 1.0;
      GradCheckEntry entry;
      entry.tensor = ref.name;
      std::size_t stride = 1;
      if (ref.name == "embeddings" && ref.size > sizes.embedding_sample) {
        stride =
            (ref.size + sizes.embedding_sample - 1) / sizes.embedding_sample;
      }
      for (std::size_t i = 0; i < ref.size; i += stride) {
        const double saved = ref.param[i];
        ref.param[i] = saved + eps;
        const double up = loss_at();
        ref.param[i] = saved - eps;
        const double down = loss_at();
        ref.param[i] = saved + 2.0 * eps;
        const double up2 = loss_at();
        ref.param[i] = saved - 2.0 * eps;
        const double down2 = loss_at();
        ref.param[i] = saved;
        const double numeric = (up - down) / (2.0 * eps);
        const double coarse = (up2 - down2) / (4.0 * eps);
        if (std::fabs(numeric - coarse) >
            1.5 * tolerance * std::max(std::fabs(numeric), measurable)) {
          unreliable = true;
          break;
        }
        const double analytic = ref.grad[i];
        const double denom =
            std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
        const double rel = std::fabs(analytic - numeric) / denom;
        if (rel > entry.max_rel_error) {
          entry.max_rel_error = rel;
          entry.worst_coord = i;
          entry.worst_analytic = analytic;
          entry.worst_numeric = numeric;
        }
      }
      report.entries.push_back(std::move(entry));
      if (unreliable) break;
    }
    // On exhaustion the (possibly partial) last report is returned anyway.
    if (!unreliable || attempt + 1 == max_attempts) break;
  }
  return report;
}

}  // namespace qarank

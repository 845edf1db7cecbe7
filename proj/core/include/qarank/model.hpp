#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qarank/composition.hpp"
#include "qarank/embeddings.hpp"
#include "qarank/encoder.hpp"
#include "qarank/scoring.hpp"

namespace qarank {

/// Full trainable parameter set for one model variant. One biLSTM serves both
/// the question and answer towers.
struct ModelParams {
  EmbeddingTable embeddings;
  BiLstmParams bilstm;
  std::optional<CnnParams> cnn;
  std::optional<AttentionParams> attention;
  ModelVariant variant = ModelVariant::LstmMax;
  Similarity similarity = Similarity::Cosine;
  GesdConfig gesd_config;
  std::optional<PoolStrategy> att_query_pool;

  std::size_t hidden() const { return bilstm.hidden(); }
  std::size_t embed_dim() const { return embeddings.dim; }

  CompositionParams composition() const;
};

struct GradientSet {
  Matrix embeddings;
  BiLstmGrads bilstm;
  std::optional<CnnGrads> cnn;
  std::optional<AttnGrads> attention;

  static GradientSet zeros_like(const ModelParams& p);
  void clear();
  void add(const GradientSet& other);
  void scale(double factor);
};

/// Named view over one parameter tensor and its gradient buffer.
struct TensorRef {
  std::string name;
  double* param = nullptr;
  double* grad = nullptr;
  std::size_t size = 0;
};

// Enumerates trainable tensors in a fixed, documented order (embeddings first
// when trainable, then forward/backward LSTM gates, CNN filters, attention).
std::vector<TensorRef> tensor_refs(ModelParams& params, GradientSet& grads);

struct DropoutMasks {
  Vector q, pos, neg;

  static DropoutMasks ones(std::size_t repr_dim);
};

struct LossCache {
  std::vector<int> q_tokens, pos_tokens, neg_tokens;
  Matrix q_xs, pos_xs, neg_xs;
  EncodedSequence q_enc, pos_enc, neg_enc;
  ComposedPair pos_pair, neg_pair;
  DropoutMasks masks;
  Vector q_dropped, pos_dropped, neg_dropped;
  double sim_pos = 0.0, sim_neg = 0.0;
  double margin = 0.2;
  double loss = 0.0;
};

// Masks are derived from the token ids: PAD positions are masked out, so both
// raw and PAD-suffixed sequences are accepted.
Vector mask_of_tokens(const std::vector<int>& tokens);

EncodedSequence encode_tokens(const std::vector<int>& tokens,
                              const ModelParams& params, Matrix* xs = nullptr);

// Full pipeline: embed, encode, compose, dropout on representations,
// similarity on both answers, hinge. masks == nullptr means eval mode
// (all-ones dropout).
double forward_loss(const std::vector<int>& q_tokens,
                    const std::vector<int>& pos_tokens,
                    const std::vector<int>& neg_tokens, const ModelParams& params,
                    double margin, const DropoutMasks* masks, LossCache* cache);

// Reverse-mode gradients of the hinge loss w.r.t. every trainable tensor.
void backward(const LossCache& cache, const ModelParams& params, GradientSet& grads);

// Eval-mode similarity for ranking; the question may be encoded once and
// reused across a candidate pool.
double score_pair(const EncodedSequence& q_enc, const std::vector<int>& a_tokens,
                  const ModelParams& params);

std::size_t representation_dim(const ModelParams& params);

}  // namespace qarank

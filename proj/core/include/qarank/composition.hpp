#pragma once

#include <optional>
#include <vector>

#include "qarank/encoder.hpp"
#include "qarank/rng.hpp"
#include "qarank/tensor.hpp"

namespace qarank {

enum class ModelVariant {
  LstmHeadTail,
  LstmAvg,
  LstmMax,
  LstmCnn,
  AttAvg,
  AttMax,
  AttCnn,
};

enum class PoolStrategy { HeadTail, Avg, Max };

const char* variant_name(ModelVariant v);
ModelVariant variant_from_name(const std::string& name);
bool variant_uses_cnn(ModelVariant v);
bool variant_uses_attention(ModelVariant v);

/// N parallel filters of width m over 2H-dim encoder outputs; k-max kept.
struct CnnParams {
  std::size_t width = 2;        // m
  std::size_t k = 1;            // values kept per filter
  std::vector<Matrix> filters;  // N entries, each width x 2H
  Vector biases;                // N

  std::size_t count() const { return filters.size(); }
  static CnnParams random(std::size_t n, std::size_t width, std::size_t in_dim,
                          std::size_t k, Rng& rng, double scale = 0.1);
  static CnnParams zeros_like(const CnnParams& p);
};

struct AttentionParams {
  Matrix W_am;  // D x 2H
  Matrix W_qm;  // D x 2H
  Vector w_ms;  // D

  std::size_t dim() const { return w_ms.size(); }
  static AttentionParams random(std::size_t d, std::size_t in_dim, Rng& rng,
                                double scale = 0.1);
  static AttentionParams zeros_like(const AttentionParams& p);
};

using CnnGrads = CnnParams;
using AttnGrads = AttentionParams;

// ---- pooling ----

struct PoolCache {
  PoolStrategy strategy = PoolStrategy::Avg;
  std::vector<std::size_t> valid;    // masked-in positions, ascending
  std::vector<std::size_t> argmax;   // max: winning row per column (first tie)
  std::size_t head_pos = 0, tail_pos = 0;  // head_tail endpoints
  std::size_t half = 0;                    // head_tail: H
};

Vector pool(const Matrix& outputs, const Vector& mask, PoolStrategy strategy,
            PoolCache* cache = nullptr);
void pool_backward(const Vector& d_out, const PoolCache& cache, Matrix& d_outputs);

// ---- convolution + k-max ----

struct ConvCache {
  std::vector<std::size_t> starts;  // window start position per output row
};

// One output row per window fully inside the mask; values tanh(sum_i
// h(t+i)^T F(i) + b) per filter. Requires masked-in length >= width.
Matrix convolve(const Matrix& outputs, const Vector& mask, const CnnParams& p,
                ConvCache* cache = nullptr);
void convolve_backward(const Matrix& d_conv, const Matrix& conv,
                       const ConvCache& cache, const Matrix& outputs,
                       const CnnParams& p, CnnGrads& g, Matrix& d_outputs);

struct KmaxCache {
  std::size_t k = 0;
  std::vector<std::vector<std::size_t>> picked;  // per filter, rows in order
};

// Per filter column, the k largest values in original row order; layout
// out[f*k + j] = j-th kept value of filter f.
Vector kmax_pool(const Matrix& conv, std::size_t k, KmaxCache* cache = nullptr);
void kmax_backward(const Vector& d_out, const KmaxCache& cache, Matrix& d_conv);

// ---- attention ----

struct AttnCache {
  Matrix m;       // len x D, tanh(W_am h_a(t) + W_qm o_q); zero at masked-out rows
  Vector logits;  // len
  Vector weights; // len, masked softmax output s
};

// Reweights each answer output row by its softmax attention weight computed
// against the question vector o_q. Masked-out rows stay zero.
Matrix attend(const Matrix& answer_outputs, const Vector& mask, const Vector& o_q,
              const AttentionParams& p, AttnCache* cache = nullptr);
void attend_backward(const Matrix& d_reweighted, const Matrix& answer_outputs,
                     const Vector& mask, const Vector& o_q, const AttnCache& cache,
                     const AttentionParams& p, AttnGrads& g,
                     Matrix& d_answer_outputs, Vector& d_o_q);

// ---- per-variant composition ----

struct CompositionParams {
  ModelVariant variant = ModelVariant::LstmMax;
  const CnnParams* cnn = nullptr;
  const AttentionParams* attention = nullptr;
  // Pooling used for the attention query o_q; defaults to the variant's own
  // pooling (avg for AttAvg/AttCnn, max for AttMax).
  std::optional<PoolStrategy> att_query_pool;
};

struct ComposeCache {
  ModelVariant variant = ModelVariant::LstmMax;
  // question side
  PoolCache q_pool;
  ConvCache q_conv_cache;
  Matrix q_conv;
  KmaxCache q_kmax;
  // attention
  bool has_attention = false;
  Vector o_q;
  PoolCache o_q_pool;
  AttnCache attn;
  Matrix reweighted;  // answer outputs after attention
  // answer side
  PoolCache a_pool;
  ConvCache a_conv_cache;
  Matrix a_conv;
  KmaxCache a_kmax;
};

struct ComposedPair {
  Vector q_repr;
  Vector a_repr;
  ComposeCache cache;
};

ComposedPair compose_pair(const EncodedSequence& q_seq, const EncodedSequence& a_seq,
                          const CompositionParams& params);

// Accumulates gradients w.r.t. encoder outputs of both sequences and, when the
// variant has them, CNN/attention parameters (g_cnn / g_attn may be null for
// variants without those blocks).
void compose_pair_backward(const Vector& d_q_repr, const Vector& d_a_repr,
                           const ComposedPair& composed,
                           const EncodedSequence& q_seq,
                           const EncodedSequence& a_seq,
                           const CompositionParams& params, CnnGrads* g_cnn,
                           AttnGrads* g_attn, Matrix& d_q_outputs,
                           Matrix& d_a_outputs);

}  // namespace qarank

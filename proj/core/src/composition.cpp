#include "qarank/composition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace qarank {
namespace {

std::vector<std::size_t> valid_positions(const Vector& mask) {
  std::vector<std::size_t> v;
  for (std::size_t t = 0; t < mask.size(); ++t) {
    if (mask[t] != 0.0) v.push_back(t);
  }
  return v;
}

Vector row_vec(const Matrix& m, std::size_t r) {
  return Vector(m.row(r), m.row(r) + m.cols);
}

PoolStrategy variant_pool(ModelVariant v) {
  switch (v) {
    case ModelVariant::LstmHeadTail: return PoolStrategy::HeadTail;
    case ModelVariant::LstmAvg:
    case ModelVariant::AttAvg:
    case ModelVariant::AttCnn: return PoolStrategy::Avg;
    case ModelVariant::LstmMax:
    case ModelVariant::AttMax: return PoolStrategy::Max;
    default: throw Error("variant has no pooling strategy");
  }
}

}  // namespace

const char* variant_name(ModelVariant v) {
  switch (v) {
    case ModelVariant::LstmHeadTail: return "lstm_head_tail";
    case ModelVariant::LstmAvg: return "lstm_avg";
    case ModelVariant::LstmMax: return "lstm_max";
    case ModelVariant::LstmCnn: return "lstm_cnn";
    case ModelVariant::AttAvg: return "att_avg";
    case ModelVariant::AttMax: return "att_max";
    case ModelVariant::AttCnn: return "att_cnn";
  }
  return "unknown";
}

ModelVariant variant_from_name(const std::string& name) {
  for (ModelVariant v :
       {ModelVariant::LstmHeadTail, ModelVariant::LstmAvg, ModelVariant::LstmMax,
        ModelVariant::LstmCnn, ModelVariant::AttAvg, ModelVariant::AttMax,
        ModelVariant::AttCnn}) {
    if (name == variant_name(v)) return v;
  }
  throw Error("unknown model variant: \"" + name + "\"");
}

bool variant_uses_cnn(ModelVariant v) {
  return v == ModelVariant::LstmCnn || v == ModelVariant::AttCnn;
}

bool variant_uses_attention(ModelVariant v) {
  return v == ModelVariant::AttAvg || v == ModelVariant::AttMax ||
         v == ModelVariant::AttCnn;
}

CnnParams CnnParams::random(std::size_t n, std::size_t width, std::size_t in_dim,
                            std::size_t k, Rng& rng, double scale) {
  CnnParams p;
  p.width = width;
  p.k = k;
  p.biases = Vector(n, 0.0);
  p.filters.reserve(n);
  for (std::size_t f = 0; f < n; ++f) {
    Matrix m(width, in_dim);
    for (double& v : m.data) v = rng.uniform(-scale, scale);
    p.filters.push_back(std::move(m));
    p.biases[f] = rng.uniform(-scale, scale);
  }
  return p;
}

CnnParams CnnParams::zeros_like(const CnnParams& src) {
  CnnParams p;
  p.width = src.width;
  p.k = src.k;
  p.biases = Vector(src.count(), 0.0);
  for (const Matrix& f : src.filters) p.filters.emplace_back(f.rows, f.cols);
  return p;
}

AttentionParams AttentionParams::random(std::size_t d, std::size_t in_dim, Rng& rng,
                                        double scale) {
  AttentionParams p;
  p.W_am = Matrix(d, in_dim);
  p.W_qm = Matrix(d, in_dim);
  p.w_ms = Vector(d, 0.0);
  for (double& v : p.W_am.data) v = rng.uniform(-scale, scale);
  for (double& v : p.W_qm.data) v = rng.uniform(-scale, scale);
  for (double& v : p.w_ms) v = rng.uniform(-scale, scale);
  return p;
}

AttentionParams AttentionParams::zeros_like(const AttentionParams& src) {
  AttentionParams p;
  p.W_am = Matrix(src.W_am.rows, src.W_am.cols);
  p.W_qm = Matrix(src.W_qm.rows, src.W_qm.cols);
  p.w_ms = Vector(src.w_ms.size(), 0.0);
  return p;
}

Vector pool(const Matrix& outputs, const Vector& mask, PoolStrategy strategy,
            PoolCache* cache) {
  auto valid = valid_positions(mask);
  if (valid.empty()) throw Error("pool: mask has no valid positions");

  PoolCache local;
  PoolCache& c = cache ? *cache : local;
  c.strategy = strategy;
  c.valid = valid;

  const std::size_t dim = outputs.cols;
  Vector out(dim, 0.0);
  switch (strategy) {
    case PoolStrategy::Avg: {
      for (std::size_t t : valid) {
        const double* row = outputs.row(t);
        for (std::size_t j = 0; j < dim; ++j) out[j] += row[j];
      }
      const double n = static_cast<double>(valid.size());
      for (double& v : out) v /= n;
      break;
    }
    case PoolStrategy::Max: {
      c.argmax.assign(dim, valid.front());
      for (std::size_t j = 0; j < dim; ++j) out[j] = -std::numeric_limits<double>::infinity();
      for (std::size_t t : valid) {
        const double* row = outputs.row(t);
        for (std::size_t j = 0; j < dim; ++j) {
          if (row[j] > out[j]) {
            out[j] = row[j];
            c.argmax[j] = t;
          }
        }
      }
      break;
    }
    case PoolStrategy::HeadTail: {
      if (dim % 2 != 0) throw Error("head_tail pool needs even output dim");
      c.half = dim / 2;
      c.head_pos = valid.front();
      c.tail_pos = valid.back();
      const double* tail = outputs.row(c.tail_pos);
      const double* head = outputs.row(c.head_pos);
      for (std::size_t j = 0; j < c.half; ++j) out[j] = tail[j];
      for (std::size_t j = 0; j < c.half; ++j) out[c.half + j] = head[c.half + j];
      break;
    }
  }
  return out;
}

void pool_backward(const Vector& d_out, const PoolCache& c, Matrix& d_outputs) {
  const std::size_t dim = d_outputs.cols;
  switch (c.strategy) {
    case PoolStrategy::Avg: {
      const double inv_n = 1.0 / static_cast<double>(c.valid.size());
      for (std::size_t t : c.valid) {
        double* row = d_outputs.row(t);
        for (std::size_t j = 0; j < dim; ++j) row[j] += d_out[j] * inv_n;
      }
      break;
    }
    case PoolStrategy::Max: {
      for (std::size_t j = 0; j < dim; ++j) {
        d_outputs.at(c.argmax[j], j) += d_out[j];
      }
      break;
    }
    case PoolStrategy::HeadTail: {
      double* tail = d_outputs.row(c.tail_pos);
      double* head = d_outputs.row(c.head_pos);
      for (std::size_t j = 0; j < c.half; ++j) tail[j] += d_out[j];
      for (std::size_t j = 0; j < c.half; ++j) head[c.half + j] += d_out[c.half + j];
      break;
    }
  }
}

Matrix convolve(const Matrix& outputs, const Vector& mask, const CnnParams& p,
                ConvCache* cache) {
  const std::size_t len = outputs.rows;
  const std::size_t m = p.width;
  std::vector<std::size_t> starts;
  for (std::size_t t = 0; t + m <= len; ++t) {
    bool ok = true;
    for (std::size_t i = 0; i < m; ++i) {
      if (mask[t + i] == 0.0) {
        ok = false;
        break;
      }
    }
    if (ok) starts.push_back(t);
  }
  if (starts.empty()) {
    throw Error("convolve: masked-in length shorter than filter width " +
                std::to_string(m));
  }
  if (cache) cache->starts = starts;

  Matrix conv(starts.size(), p.count());
  for (std::size_t r = 0; r < starts.size(); ++r) {
    const std::size_t t = starts[r];
    for (std::size_t f = 0; f < p.count(); ++f) {
      double acc = p.biases[f];
      const Matrix& filt = p.filters[f];
      for (std::size_t i = 0; i < m; ++i) {
        const double* hrow = outputs.row(t + i);
        const double* frow = filt.row(i);
        for (std::size_t j = 0; j < outputs.cols; ++j) acc += hrow[j] * frow[j];
      }
      conv.at(r, f) = std::tanh(acc);
    }
  }
  return conv;
}

void convolve_backward(const Matrix& d_conv, const Matrix& conv,
                       const ConvCache& cache, const Matrix& outputs,
                       const CnnParams& p, CnnGrads& g, Matrix& d_outputs) {
  for (std::size_t r = 0; r < cache.starts.size(); ++r) {
    const std::size_t t = cache.starts[r];
    for (std::size_t f = 0; f < p.count(); ++f) {
      const double o = conv.at(r, f);
      const double dz = d_conv.at(r, f) * (1.0 - o * o);
      if (dz == 0.0) continue;
      g.biases[f] += dz;
      const Matrix& filt = p.filters[f];
      Matrix& gfilt = g.filters[f];
      for (std::size_t i = 0; i < p.width; ++i) {
        const double* hrow = outputs.row(t + i);
        const double* frow = filt.row(i);
        double* gfrow = gfilt.row(i);
        double* dhrow = d_outputs.row(t + i);
        for (std::size_t j = 0; j < outputs.cols; ++j) {
          gfrow[j] += dz * hrow[j];
          dhrow[j] += dz * frow[j];
        }
      }
    }
  }
}

Vector kmax_pool(const Matrix& conv, std::size_t k, KmaxCache* cache) {
  if (conv.rows < k) {
    throw Error("kmax_pool: " + std::to_string(conv.rows) + " rows < k=" +
                std::to_string(k));
  }
  const std::size_t n = conv.cols;
  Vector out(k * n, 0.0);
  if (cache) {
    cache->k = k;
    cache->picked.assign(n, {});
  }
  std::vector<std::size_t> order(conv.rows);
  for (std::size_t f = 0; f < n; ++f) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return conv.at(a, f) > conv.at(b, f);
    });
    std::vector<std::size_t> picked(order.begin(), order.begin() + k);
    std::sort(picked.begin(), picked.end());
    for (std::size_t j = 0; j < k; ++j) out[f * k + j] = conv.at(picked[j], f);
    if (cache) cache->picked[f] = std::move(picked);
  }
  return out;
}

void kmax_backward(const Vector& d_out, const KmaxCache& cache, Matrix& d_conv) {
  for (std::size_t f = 0; f < cache.picked.size(); ++f) {
    for (std::size_t j = 0; j < cache.k; ++j) {
      d_conv.at(cache.picked[f][j], f) += d_out[f * cache.k + j];
    }
  }
}

Matrix attend(const Matrix& answer_outputs, const Vector& mask, const Vector& o_q,
              const AttentionParams& p, AttnCache* cache) {
  const std::size_t len = answer_outputs.rows;
  const std::size_t d = p.dim();

  AttnCache local;
  AttnCache& c = cache ? *cache : local;
  c.m = Matrix(len, d);
  c.logits = Vector(len, 0.0);

  const Vector query_term = matvec(p.W_qm, o_q);
  for (std::size_t t = 0; t < len; ++t) {
    if (mask[t] == 0.0) continue;
    Vector z = matvec(p.W_am, row_vec(answer_outputs, t));
    for (std::size_t j = 0; j < d; ++j) z[j] = std::tanh(z[j] + query_term[j]);
    double logit = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      c.m.at(t, j) = z[j];
      logit += p.w_ms[j] * z[j];
    }
    c.logits[t] = logit;
  }
  c.weights = masked_softmax(c.logits, mask);

  Matrix out(len, answer_outputs.cols);
  for (std::size_t t = 0; t < len; ++t) {
    if (mask[t] == 0.0) continue;
    const double s = c.weights[t];
    const double* src = answer_outputs.row(t);
    double* dst = out.row(t);
    for (std::size_t j = 0; j < answer_outputs.cols; ++j) dst[j] = src[j] * s;
  }
  return out;
}

void attend_backward(const Matrix& d_reweighted, const Matrix& answer_outputs,
                     const Vector& mask, const Vector& o_q, const AttnCache& c,
                     const AttentionParams& p, AttnGrads& g,
                     Matrix& d_answer_outputs, Vector& d_o_q) {
  const std::size_t len = answer_outputs.rows;
  const std::size_t dim = answer_outputs.cols;

  // d s_t and the direct path into h_a(t).
  Vector d_s(len, 0.0);
  for (std::size_t t = 0; t < len; ++t) {
    if (mask[t] == 0.0) continue;
    const double* drow = d_reweighted.row(t);
    const double* hrow = answer_outputs.row(t);
    double* dhrow = d_answer_outputs.row(t);
    double acc = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      acc += drow[j] * hrow[j];
      dhrow[j] += drow[j] * c.weights[t];
    }
    d_s[t] = acc;
  }

  // Softmax Jacobian: d_u = s * (d_s - sum_t s_t d_s_t).
  double weighted = 0.0;
  for (std::size_t t = 0; t < len; ++t) weighted += c.weights[t] * d_s[t];
  for (std::size_t t = 0; t < len; ++t) {
    if (mask[t] == 0.0) continue;
    const double d_u = c.weights[t] * (d_s[t] - weighted);
    if (d_u == 0.0) continue;

    const Vector m_t = row_vec(c.m, t);
    axpy(d_u, m_t, g.w_ms);

    Vector d_z(p.dim());
    for (std::size_t j = 0; j < p.dim(); ++j) {
      d_z[j] = d_u * p.w_ms[j] * (1.0 - m_t[j] * m_t[j]);
    }
    const Vector h_t = row_vec(answer_outputs, t);
    add_outer(g.W_am, d_z, h_t);
    add_outer(g.W_qm, d_z, o_q);
    Vector dh = matvec_transposed(p.W_am, d_z);
    double* dhrow = d_answer_outputs.row(t);
    for (std::size_t j = 0; j < dim; ++j) dhrow[j] += dh[j];
    axpy(1.0, matvec_transposed(p.W_qm, d_z), d_o_q);
  }
}

ComposedPair compose_pair(const EncodedSequence& q_seq, const EncodedSequence& a_seq,
                          const CompositionParams& params) {
  ComposedPair out;
  ComposeCache& c = out.cache;
  c.variant = params.variant;

  switch (params.variant) {
    case ModelVariant::LstmHeadTail:
    case ModelVariant::LstmAvg:
    case ModelVariant::LstmMax: {
      const PoolStrategy strat = variant_pool(params.variant);
      out.q_repr = pool(q_seq.outputs, q_seq.mask, strat, &c.q_pool);
      out.a_repr = pool(a_seq.outputs, a_seq.mask, strat, &c.a_pool);
      break;
    }
    case ModelVariant::LstmCnn: {
      if (!params.cnn) throw Error("lstm_cnn variant requires CNN parameters");
      c.q_conv = convolve(q_seq.outputs, q_seq.mask, *params.cnn, &c.q_conv_cache);
      out.q_repr = kmax_pool(c.q_conv, params.cnn->k, &c.q_kmax);
      c.a_conv = convolve(a_seq.outputs, a_seq.mask, *params.cnn, &c.a_conv_cache);
      out.a_repr = kmax_pool(c.a_conv, params.cnn->k, &c.a_kmax);
      break;
    }
    case ModelVariant::AttAvg:
    case ModelVariant::AttMax: {
      if (!params.attention) throw Error("attention variant requires attention parameters");
      const PoolStrategy strat = variant_pool(params.variant);
      const PoolStrategy q_strat = params.att_query_pool.value_or(strat);
      c.has_attention = true;
      out.q_repr = pool(q_seq.outputs, q_seq.mask, strat, &c.q_pool);
      c.o_q = pool(q_seq.outputs, q_seq.mask, q_strat, &c.o_q_pool);
      c.reweighted = attend(a_seq.outputs, a_seq.mask, c.o_q, *params.attention, &c.attn);
      out.a_repr = pool(c.reweighted, a_seq.mask, strat, &c.a_pool);
      break;
    }
    case ModelVariant::AttCnn: {
      if (!params.cnn || !params.attention) {
        throw Error("att_cnn variant requires CNN and attention parameters");
      }
      const PoolStrategy q_strat = params.att_query_pool.value_or(PoolStrategy::Avg);
      c.has_attention = true;
      c.o_q = pool(q_seq.outputs, q_seq.mask, q_strat, &c.o_q_pool);
      c.reweighted = attend(a_seq.outputs, a_seq.mask, c.o_q, *params.attention, &c.attn);
      c.q_conv = convolve(q_seq.outputs, q_seq.mask, *params.cnn, &c.q_conv_cache);
      out.q_repr = kmax_pool(c.q_conv, params.cnn->k, &c.q_kmax);
      c.a_conv = convolve(c.reweighted, a_seq.mask, *params.cnn, &c.a_conv_cache);
      out.a_repr = kmax_pool(c.a_conv, params.cnn->k, &c.a_kmax);
      break;
    }
  }

  if (out.q_repr.size() != out.a_repr.size()) {
    throw Error("compose_pair: representation dims differ");
  }
  return out;
}

void compose_pair_backward(const Vector& d_q_repr, const Vector& d_a_repr,
                           const ComposedPair& composed,
                           const EncodedSequence& q_seq,
                           const EncodedSequence& a_seq,
                           const CompositionParams& params, CnnGrads* g_cnn,
                           AttnGrads* g_attn, Matrix& d_q_outputs,
                           Matrix& d_a_outputs) {
  const ComposeCache& c = composed.cache;
  switch (params.variant) {
    case ModelVariant::LstmHeadTail:
    case ModelVariant::LstmAvg:
    case ModelVariant::LstmMax: {
      pool_backward(d_q_repr, c.q_pool, d_q_outputs);
      pool_backward(d_a_repr, c.a_pool, d_a_outputs);
      break;
    }
    case ModelVariant::LstmCnn: {
      Matrix d_q_conv(c.q_conv.rows, c.q_conv.cols);
      kmax_backward(d_q_repr, c.q_kmax, d_q_conv);
      convolve_backward(d_q_conv, c.q_conv, c.q_conv_cache, q_seq.outputs,
                        *params.cnn, *g_cnn, d_q_outputs);
      Matrix d_a_conv(c.a_conv.rows, c.a_conv.cols);
      kmax_backward(d_a_repr, c.a_kmax, d_a_conv);
      convolve_backward(d_a_conv, c.a_conv, c.a_conv_cache, a_seq.outputs,
                        *params.cnn, *g_cnn, d_a_outputs);
      break;
    }
    case ModelVariant::AttAvg:
    case ModelVariant::AttMax: {
      Matrix d_reweighted(c.reweighted.rows, c.reweighted.cols);
      pool_backward(d_a_repr, c.a_pool, d_reweighted);
      Vector d_o_q(c.o_q.size(), 0.0);
      attend_backward(d_reweighted, a_seq.outputs, a_seq.mask, c.o_q, c.attn,
                      *params.attention, *g_attn, d_a_outputs, d_o_q);
      pool_backward(d_q_repr, c.q_pool, d_q_outputs);
      pool_backward(d_o_q, c.o_q_pool, d_q_outputs);
      break;
    }
    case ModelVariant::AttCnn: {
      Matrix d_a_conv(c.a_conv.rows, c.a_conv.cols);
      kmax_backward(d_a_repr, c.a_kmax, d_a_conv);
      Matrix d_reweighted(c.reweighted.rows, c.reweighted.cols);
      convolve_backward(d_a_conv, c.a_conv, c.a_conv_cache, c.reweighted,
                        *params.cnn, *g_cnn, d_reweighted);
      Vector d_o_q(c.o_q.size(), 0.0);
      attend_backward(d_reweighted, a_seq.outputs, a_seq.mask, c.o_q, c.attn,
                      *params.attention, *g_attn, d_a_outputs, d_o_q);

      Matrix d_q_conv(c.q_conv.rows, c.q_conv.cols);
      kmax_backward(d_q_repr, c.q_kmax, d_q_conv);
      convolve_backward(d_q_conv, c.q_conv, c.q_conv_cache, q_seq.outputs,
                        *params.cnn, *g_cnn, d_q_outputs);
      pool_backward(d_o_q, c.o_q_pool, d_q_outputs);
      break;
    }
  }
}

}  // namespace qarank

#include "qarank/model.hpp"

#include <algorithm>

namespace qarank {
namespace {

double similarity_value(const ModelParams& p, const Vector& a, const Vector& b) {
  return p.similarity == Similarity::Cosine
             ? cosine(a, b)
             : gesd(a, b, p.gesd_config.gamma, p.gesd_config.c);
}

void similarity_backward(const ModelParams& p, const Vector& a, const Vector& b,
                         double d_sim, Vector& d_a, Vector& d_b) {
  if (p.similarity == Similarity::Cosine) {
    cosine_backward(a, b, d_sim, d_a, d_b);
  } else {
    gesd_backward(a, b, p.gesd_config.gamma, p.gesd_config.c, d_sim, d_a, d_b);
  }
}

void scatter_embedding_grads(const Matrix& d_xs, const std::vector<int>& tokens,
                             Matrix& d_emb) {
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const int id = tokens[t];
    if (id == Vocabulary::kPad) continue;
    const double* src = d_xs.row(t);
    double* dst = d_emb.row(static_cast<std::size_t>(id));
    for (std::size_t j = 0; j < d_xs.cols; ++j) dst[j] += src[j];
  }
}

void push_lstm_refs(const std::string& prefix, LstmParams& p, LstmGrads& g,
                    std::vector<TensorRef>& out) {
  auto push_m = [&](const char* name, Matrix& pm, Matrix& gm) {
    out.push_back({prefix + name, pm.data.data(), gm.data.data(), pm.data.size()});
  };
  auto push_v = [&](const char* name, Vector& pv, Vector& gv) {
    out.push_back({prefix + name, pv.data(), gv.data(), pv.size()});
  };
  push_m("W_i", p.W_i, g.W_i);
  push_m("W_f", p.W_f, g.W_f);
  push_m("W_o", p.W_o, g.W_o);
  push_m("W_c", p.W_c, g.W_c);
  push_m("U_i", p.U_i, g.U_i);
  push_m("U_f", p.U_f, g.U_f);
  push_m("U_o", p.U_o, g.U_o);
  push_m("U_c", p.U_c, g.U_c);
  push_v("b_i", p.b_i, g.b_i);
  push_v("b_f", p.b_f, g.b_f);
  push_v("b_o", p.b_o, g.b_o);
  push_v("b_c", p.b_c, g.b_c);
}

}  // namespace

CompositionParams ModelParams::composition() const {
  CompositionParams c;
  c.variant = variant;
  c.cnn = cnn ? &*cnn : nullptr;
  c.attention = attention ? &*attention : nullptr;
  c.att_query_pool = att_query_pool;
  return c;
}

GradientSet GradientSet::zeros_like(const ModelParams& p) {
  GradientSet g;
  g.embeddings = Matrix(p.embeddings.vectors.rows, p.embeddings.vectors.cols);
  g.bilstm.forward = LstmParams::zeros(p.bilstm.hidden(), p.bilstm.input());
  g.bilstm.backward = LstmParams::zeros(p.bilstm.hidden(), p.bilstm.input());
  if (p.cnn) g.cnn = CnnGrads::zeros_like(*p.cnn);
  if (p.attention) g.attention = AttnGrads::zeros_like(*p.attention);
  return g;
}

void GradientSet::clear() {
  auto zero_lstm = [](LstmGrads& g) {
    for (Matrix* m : {&g.W_i, &g.W_f, &g.W_o, &g.W_c, &g.U_i, &g.U_f, &g.U_o, &g.U_c}) {
      std::fill(m->data.begin(), m->data.end(), 0.0);
    }
    for (Vector* v : {&g.b_i, &g.b_f, &g.b_o, &g.b_c}) {
      std::fill(v->begin(), v->end(), 0.0);
    }
  };
  std::fill(embeddings.data.begin(), embeddings.data.end(), 0.0);
  zero_lstm(bilstm.forward);
  zero_lstm(bilstm.backward);
  if (cnn) {
    for (Matrix& f : cnn->filters) std::fill(f.data.begin(), f.data.end(), 0.0);
    std::fill(cnn->biases.begin(), cnn->biases.end(), 0.0);
  }
  if (attention) {
    std::fill(attention->W_am.data.begin(), attention->W_am.data.end(), 0.0);
    std::fill(attention->W_qm.data.begin(), attention->W_qm.data.end(), 0.0);
    std::fill(attention->w_ms.begin(), attention->w_ms.end(), 0.0);
  }
}

void GradientSet::add(const GradientSet& other) {
  auto add_lstm = [](LstmGrads& a, const LstmGrads& b) {
    const Matrix* bm[] = {&b.W_i, &b.W_f, &b.W_o, &b.W_c, &b.U_i, &b.U_f, &b.U_o, &b.U_c};
    Matrix* am[] = {&a.W_i, &a.W_f, &a.W_o, &a.W_c, &a.U_i, &a.U_f, &a.U_o, &a.U_c};
    for (int i = 0; i < 8; ++i) {
      for (std::size_t j = 0; j < am[i]->data.size(); ++j) am[i]->data[j] += bm[i]->data[j];
    }
    const Vector* bv[] = {&b.b_i, &b.b_f, &b.b_o, &b.b_c};
    Vector* av[] = {&a.b_i, &a.b_f, &a.b_o, &a.b_c};
    for (int i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < av[i]->size(); ++j) (*av[i])[j] += (*bv[i])[j];
    }
  };
  for (std::size_t j = 0; j < embeddings.data.size(); ++j) {
    embeddings.data[j] += other.embeddings.data[j];
  }
  add_lstm(bilstm.forward, other.bilstm.forward);
  add_lstm(bilstm.backward, other.bilstm.backward);
  if (cnn) {
    for (std::size_t f = 0; f < cnn->filters.size(); ++f) {
      for (std::size_t j = 0; j < cnn->filters[f].data.size(); ++j) {
        cnn->filters[f].data[j] += other.cnn->filters[f].data[j];
      }
    }
    for (std::size_t j = 0; j < cnn->biases.size(); ++j) {
      cnn->biases[j] += other.cnn->biases[j];
    }
  }
  if (attention) {
    for (std::size_t j = 0; j < attention->W_am.data.size(); ++j) {
      attention->W_am.data[j] += other.attention->W_am.data[j];
    }
    for (std::size_t j = 0; j < attention->W_qm.data.size(); ++j) {
      attention->W_qm.data[j] += other.attention->W_qm.data[j];
    }
    for (std::size_t j = 0; j < attention->w_ms.size(); ++j) {
      attention->w_ms[j] += other.attention->w_ms[j];
    }
  }
}

void GradientSet::scale(double factor) {
  auto scale_lstm = [factor](LstmGrads& g) {
    for (Matrix* m : {&g.W_i, &g.W_f, &g.W_o, &g.W_c, &g.U_i, &g.U_f, &g.U_o, &g.U_c}) {
      for (double& v : m->data) v *= factor;
    }
    for (Vector* v : {&g.b_i, &g.b_f, &g.b_o, &g.b_c}) {
      for (double& x : *v) x *= factor;
    }
  };
  for (double& v : embeddings.data) v *= factor;
  scale_lstm(bilstm.forward);
  scale_lstm(bilstm.backward);
  if (cnn) {
    for (Matrix& f : cnn->filters) {
      for (double& v : f.data) v *= factor;
    }
    for (double& v : cnn->biases) v *= factor;
  }
  if (attention) {
    for (double& v : attention->W_am.data) v *= factor;
    for (double& v : attention->W_qm.data) v *= factor;
    for (double& v : attention->w_ms) v *= factor;
  }
}

std::vector<TensorRef> tensor_refs(ModelParams& params, GradientSet& grads) {
  std::vector<TensorRef> out;
  if (params.embeddings.trainable) {
    out.push_back({"embeddings", params.embeddings.vectors.data.data(),
                   grads.embeddings.data.data(), params.embeddings.vectors.data.size()});
  }
  push_lstm_refs("lstm_fwd.", params.bilstm.forward, grads.bilstm.forward, out);
  push_lstm_refs("lstm_bwd.", params.bilstm.backward, grads.bilstm.backward, out);
  if (params.cnn) {
    for (std::size_t f = 0; f < params.cnn->count(); ++f) {
      out.push_back({"cnn.filter[" + std::to_string(f) + "]",
                     params.cnn->filters[f].data.data(),
                     grads.cnn->filters[f].data.data(),
                     params.cnn->filters[f].data.size()});
    }
    out.push_back({"cnn.biases", params.cnn->biases.data(), grads.cnn->biases.data(),
                   params.cnn->biases.size()});
  }
  if (params.attention) {
    out.push_back({"attn.W_am", params.attention->W_am.data.data(),
                   grads.attention->W_am.data.data(),
                   params.attention->W_am.data.size()});
    out.push_back({"attn.W_qm", params.attention->W_qm.data.data(),
                   grads.attention->W_qm.data.data(),
                   params.attention->W_qm.data.size()});
    out.push_back({"attn.w_ms", params.attention->w_ms.data(),
                   grads.attention->w_ms.data(), params.attention->w_ms.size()});
  }
  return out;
}

DropoutMasks DropoutMasks::ones(std::size_t repr_dim) {
  DropoutMasks m;
  m.q = m.pos = m.neg = Vector(repr_dim, 1.0);
  return m;
}

Vector mask_of_tokens(const std::vector<int>& tokens) {
  Vector mask(tokens.size());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    mask[t] = tokens[t] == Vocabulary::kPad ? 0.0 : 1.0;
  }
  return mask;
}

EncodedSequence encode_tokens(const std::vector<int>& tokens,
                              const ModelParams& params, Matrix* xs) {
  if (tokens.empty()) throw Error("encode_tokens: empty token sequence");
  Matrix local = lookup_sequence(tokens, params.embeddings);
  EncodedSequence enc = bilstm_encode(local, mask_of_tokens(tokens), params.bilstm);
  if (xs) *xs = std::move(local);
  return enc;
}

std::size_t representation_dim(const ModelParams& params) {
  if (variant_uses_cnn(params.variant)) return params.cnn->k * params.cnn->count();
  return 2 * params.hidden();
}

double forward_loss(const std::vector<int>& q_tokens,
                    const std::vector<int>& pos_tokens,
                    const std::vector<int>& neg_tokens, const ModelParams& params,
                    double margin, const DropoutMasks* masks, LossCache* cache) {
  LossCache local;
  LossCache& c = cache ? *cache : local;
  c.q_tokens = q_tokens;
  c.pos_tokens = pos_tokens;
  c.neg_tokens = neg_tokens;
  c.margin = margin;

  c.q_enc = encode_tokens(q_tokens, params, &c.q_xs);
  c.pos_enc = encode_tokens(pos_tokens, params, &c.pos_xs);
  c.neg_enc = encode_tokens(neg_tokens, params, &c.neg_xs);

  const CompositionParams comp = params.composition();
  c.pos_pair = compose_pair(c.q_enc, c.pos_enc, comp);
  c.neg_pair = compose_pair(c.q_enc, c.neg_enc, comp);

  const std::size_t dim = c.pos_pair.q_repr.size();
  c.masks = masks ? *masks : DropoutMasks::ones(dim);
  c.q_dropped = elementwise(c.pos_pair.q_repr, c.masks.q, Binary::Mul);
  c.pos_dropped = elementwise(c.pos_pair.a_repr, c.masks.pos, Binary::Mul);
  c.neg_dropped = elementwise(c.neg_pair.a_repr, c.masks.neg, Binary::Mul);

  c.sim_pos = similarity_value(params, c.q_dropped, c.pos_dropped);
  c.sim_neg = similarity_value(params, c.q_dropped, c.neg_dropped);
  c.loss = hinge_loss(c.sim_pos, c.sim_neg, margin);
  return c.loss;
}

void backward(const LossCache& c, const ModelParams& params, GradientSet& grads) {
  if (c.loss <= 0.0) return;  // hinge dead zone: all gradients are zero

  const std::size_t dim = c.q_dropped.size();
  Vector d_q_dropped(dim, 0.0), d_pos_dropped(dim, 0.0), d_neg_dropped(dim, 0.0);
  similarity_backward(params, c.q_dropped, c.pos_dropped, -1.0, d_q_dropped,
                      d_pos_dropped);
  Vector d_q_dropped_neg(dim, 0.0);
  similarity_backward(params, c.q_dropped, c.neg_dropped, 1.0, d_q_dropped_neg,
                      d_neg_dropped);

  // Through dropout. The question term is split per similarity so each flows
  // through its own composition cache.
  Vector d_q_repr_pos = elementwise(d_q_dropped, c.masks.q, Binary::Mul);
  Vector d_q_repr_neg = elementwise(d_q_dropped_neg, c.masks.q, Binary::Mul);
  Vector d_pos_repr = elementwise(d_pos_dropped, c.masks.pos, Binary::Mul);
  Vector d_neg_repr = elementwise(d_neg_dropped, c.masks.neg, Binary::Mul);

  const CompositionParams comp = params.composition();
  CnnGrads* g_cnn = grads.cnn ? &*grads.cnn : nullptr;
  AttnGrads* g_attn = grads.attention ? &*grads.attention : nullptr;

  Matrix d_q_outputs(c.q_enc.outputs.rows, c.q_enc.outputs.cols);
  Matrix d_pos_outputs(c.pos_enc.outputs.rows, c.pos_enc.outputs.cols);
  Matrix d_neg_outputs(c.neg_enc.outputs.rows, c.neg_enc.outputs.cols);

  compose_pair_backward(d_q_repr_pos, d_pos_repr, c.pos_pair, c.q_enc, c.pos_enc,
                        comp, g_cnn, g_attn, d_q_outputs, d_pos_outputs);
  compose_pair_backward(d_q_repr_neg, d_neg_repr, c.neg_pair, c.q_enc, c.neg_enc,
                        comp, g_cnn, g_attn, d_q_outputs, d_neg_outputs);

  Matrix d_q_xs(c.q_xs.rows, c.q_xs.cols);
  Matrix d_pos_xs(c.pos_xs.rows, c.pos_xs.cols);
  Matrix d_neg_xs(c.neg_xs.rows, c.neg_xs.cols);
  bilstm_backward(d_q_outputs, c.q_xs, c.q_enc, params.bilstm, grads.bilstm, d_q_xs);
  bilstm_backward(d_pos_outputs, c.pos_xs, c.pos_enc, params.bilstm, grads.bilstm,
                  d_pos_xs);
  bilstm_backward(d_neg_outputs, c.neg_xs, c.neg_enc, params.bilstm, grads.bilstm,
                  d_neg_xs);

  if (params.embeddings.trainable) {
    scatter_embedding_grads(d_q_xs, c.q_tokens, grads.embeddings);
    scatter_embedding_grads(d_pos_xs, c.pos_tokens, grads.embeddings);
    scatter_embedding_grads(d_neg_xs, c.neg_tokens, grads.embeddings);
  }
}

double score_pair(const EncodedSequence& q_enc, const std::vector<int>& a_tokens,
                  const ModelParams& params) {
  Matrix a_xs;
  EncodedSequence a_enc = encode_tokens(a_tokens, params, &a_xs);
  ComposedPair pair = compose_pair(q_enc, a_enc, params.composition());
  return params.similarity == Similarity::Cosine
             ? cosine(pair.q_repr, pair.a_repr)
             : gesd(pair.q_repr, pair.a_repr, params.gesd_config.gamma,
                    params.gesd_config.c);
}

}  // namespace qarank

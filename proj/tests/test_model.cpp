#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "qarank/model.hpp"
#include "qarank/training.hpp"

using namespace qarank;

namespace {

ModelParams tiny_model(ModelVariant variant, std::uint64_t seed,
                       double scale = 0.3) {
  Rng rng(seed);
  return make_random_model(variant, /*vocab=*/12, /*embed_dim=*/4, /*hidden=*/5,
                           /*attention_dim=*/6, /*filters=*/3, /*filter_width=*/2,
                           /*kmax=*/1, rng, scale);
}

}  // namespace

TEST_CASE("mask_of_tokens marks PAD positions") {
  Vector m = mask_of_tokens({3, 4, Vocabulary::kPad, 5, Vocabulary::kPad});
  REQUIRE(m.size() == 5);
  CHECK(m[0] == 1.0);
  CHECK(m[1] == 1.0);
  CHECK(m[2] == 0.0);
  CHECK(m[3] == 1.0);
  CHECK(m[4] == 0.0);
}

TEST_CASE("forward_loss symmetric answers give exactly the margin") {
  ModelParams params = tiny_model(ModelVariant::LstmMax, 61);
  const std::vector<int> q = {2, 3, 4};
  const std::vector<int> a = {5, 6, 7, 8};
  const double loss = forward_loss(q, a, a, params, 0.2, nullptr, nullptr);
  CHECK(loss == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("forward_loss margin satisfied gives zero loss and zero gradients") {
  ModelParams params = tiny_model(ModelVariant::LstmAvg, 62);
  const std::vector<int> q = {2, 3, 4};
  const std::vector<int> pos = {5, 6};
  const std::vector<int> neg = {7, 8, 9};
  LossCache cache;
  // with margin -10 the hinge is certainly in its dead zone
  const double loss = forward_loss(q, pos, neg, params, -10.0, nullptr, &cache);
  CHECK(loss == 0.0);
  GradientSet grads = GradientSet::zeros_like(params);
  backward(cache, params, grads);
  for (double v : grads.embeddings.data) CHECK(v == 0.0);
  for (double v : grads.bilstm.forward.W_i.data) CHECK(v == 0.0);
  for (double v : grads.bilstm.backward.U_c.data) CHECK(v == 0.0);
}

TEST_CASE("forward_loss matches an independent pipeline transcription") {
  // lstm_avg with cosine: embed, run both LSTM directions with the step
  // oracle, average, cosine both answers, hinge.
  ModelParams params = tiny_model(ModelVariant::LstmAvg, 63);
  const std::vector<int> q = {2, 3, 4};
  const std::vector<int> pos = {5, 6, 7};
  const std::vector<int> neg = {8, 9};
  const double margin = 5.0;
  const double got = forward_loss(q, pos, neg, params, margin, nullptr, nullptr);

  auto encode_avg = [&](const std::vector<int>& tokens) {
    const std::size_t len = tokens.size();
    const std::size_t H = params.hidden();
    const std::size_t E = params.embed_dim();
    std::vector<std::vector<double>> fwd(len), bwd(len);
    std::vector<double> h(H, 0.0), c(H, 0.0);
    for (std::size_t t = 0; t < len; ++t) {
      std::vector<double> x(E);
      for (std::size_t j = 0; j < E; ++j)
        x[j] = params.embeddings.vectors.at(
            static_cast<std::size_t>(tokens[t]), j);
      std::vector<double> hn, cn;
      oracle::lstm_step(x, h, c, params.bilstm.forward, hn, cn);
      h = hn;
      c = cn;
      fwd[t] = h;
    }
    h.assign(H, 0.0);
    c.assign(H, 0.0);
    for (std::size_t step = 0; step < len; ++step) {
      const std::size_t t = len - 1 - step;
      std::vector<double> x(E);
      for (std::size_t j = 0; j < E; ++j)
        x[j] = params.embeddings.vectors.at(
            static_cast<std::size_t>(tokens[t]), j);
      std::vector<double> hn, cn;
      oracle::lstm_step(x, h, c, params.bilstm.backward, hn, cn);
      h = hn;
      c = cn;
      bwd[t] = h;
    }
    std::vector<double> avg(2 * H, 0.0);
    for (std::size_t t = 0; t < len; ++t) {
      for (std::size_t j = 0; j < H; ++j) {
        avg[j] += fwd[t][j] / static_cast<double>(len);
        avg[H + j] += bwd[t][j] / static_cast<double>(len);
      }
    }
    return avg;
  };
  auto cos = [](const std::vector<double>& a, const std::vector<double>& b) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      ab += a[i] * b[i];
      aa += a[i] * a[i];
      bb += b[i] * b[i];
    }
    return ab / (std::sqrt(aa) * std::sqrt(bb));
  };
  const auto q_repr = encode_avg(q);
  const double sim_pos = cos(q_repr, encode_avg(pos));
  const double sim_neg = cos(q_repr, encode_avg(neg));
  const double want = std::max(0.0, margin - sim_pos + sim_neg);
  CHECK(got == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("eval mode ignores PAD suffixes for every variant") {
  for (int vi = 0; vi < 7; ++vi) {
    const ModelVariant v = static_cast<ModelVariant>(vi);
    ModelParams params = tiny_model(v, 64);
    const std::vector<int> q = {2, 3, 4, 5};
    std::vector<int> q_padded = q;
    for (int i = 0; i < 3; ++i) q_padded.push_back(Vocabulary::kPad);

    EncodedSequence enc = encode_tokens(q, params);
    EncodedSequence enc_padded = encode_tokens(q_padded, params);
    const std::vector<int> a = {6, 7, 8};
    const double s1 = score_pair(enc, a, params);
    const double s2 = score_pair(enc_padded, a, params);
    CHECK(std::fabs(s1 - s2) <= 1e-12);
  }
}

TEST_CASE("score_pair agrees with forward_loss similarities") {
  ModelParams params = tiny_model(ModelVariant::AttMax, 65);
  const std::vector<int> q = {2, 3, 4};
  const std::vector<int> pos = {5, 6, 7};
  const std::vector<int> neg = {8, 9, 10};
  LossCache cache;
  forward_loss(q, pos, neg, params, 5.0, nullptr, &cache);
  EncodedSequence q_enc = encode_tokens(q, params);
  CHECK(score_pair(q_enc, pos, params) ==
        doctest::Approx(cache.sim_pos).epsilon(1e-14));
  CHECK(score_pair(q_enc, neg, params) ==
        doctest::Approx(cache.sim_neg).epsilon(1e-14));
}

TEST_CASE("dropout masks scale the representations") {
  ModelParams params = tiny_model(ModelVariant::LstmMax, 66);
  const std::vector<int> q = {2, 3};
  const std::vector<int> pos = {4, 5};
  const std::vector<int> neg = {6, 7};
  const std::size_t dim = representation_dim(params);
  DropoutMasks masks = DropoutMasks::ones(dim);
  LossCache with_ones, without;
  const double l1 = forward_loss(q, pos, neg, params, 0.2, &masks, &with_ones);
  const double l2 = forward_loss(q, pos, neg, params, 0.2, nullptr, &without);
  CHECK(l1 == l2);  // all-ones masks equal eval mode

  // zeroing one coordinate changes the cosine input
  masks.q[0] = 0.0;
  const double l3 = forward_loss(q, pos, neg, params, 0.2, &masks, nullptr);
  CHECK(with_ones.q_dropped[0] != 0.0);
  (void)l3;
}

TEST_CASE("representation_dim per variant") {
  for (int vi = 0; vi < 7; ++vi) {
    const ModelVariant v = static_cast<ModelVariant>(vi);
    ModelParams params = tiny_model(v, 67);
    const std::size_t expect = variant_uses_cnn(v) ? 3 : 10;  // kN vs 2H
    CHECK(representation_dim(params) == expect);
  }
}

TEST_CASE("tensor_refs covers the right tensors per variant") {
  for (int vi = 0; vi < 7; ++vi) {
    const ModelVariant v = static_cast<ModelVariant>(vi);
    ModelParams params = tiny_model(v, 68);
    GradientSet grads = GradientSet::zeros_like(params);
    auto refs = tensor_refs(params, grads);
    std::size_t expect = 1 + 24;  // embeddings + 2 x 12 LSTM tensors
    if (variant_uses_cnn(v)) expect += 4;       // 3 filters + biases
    if (variant_uses_attention(v)) expect += 3; // W_am, W_qm, w_ms
    CHECK(refs.size() == expect);
    CHECK(refs.front().name == "embeddings");
  }
}

TEST_CASE("tensor_refs omits embeddings when frozen") {
  ModelParams params = tiny_model(ModelVariant::LstmMax, 69);
  params.embeddings.trainable = false;
  GradientSet grads = GradientSet::zeros_like(params);
  auto refs = tensor_refs(params, grads);
  CHECK(refs.size() == 24);
  CHECK(refs.front().name != "embeddings");
}

TEST_CASE("question and answer towers share the same parameter storage") {
  ModelParams params = tiny_model(ModelVariant::LstmMax, 70);
  const std::vector<int> q = {2, 3, 4};
  const std::vector<int> a = {5, 6};

  // Identical token sequences encode identically through the shared biLSTM.
  EncodedSequence enc1 = encode_tokens(q, params);
  EncodedSequence enc2 = encode_tokens(q, params);
  for (std::size_t i = 0; i < enc1.outputs.data.size(); ++i)
    CHECK(enc1.outputs.data[i] == enc2.outputs.data[i]);

  // An update through the single parameter object is visible to both sides.
  EncodedSequence q_before = encode_tokens(q, params);
  EncodedSequence a_before = encode_tokens(a, params);
  params.bilstm.forward.W_i.at(0, 0) += 0.5;
  EncodedSequence q_after = encode_tokens(q, params);
  EncodedSequence a_after = encode_tokens(a, params);
  bool q_changed = false, a_changed = false;
  for (std::size_t i = 0; i < q_after.outputs.data.size(); ++i)
    if (q_after.outputs.data[i] != q_before.outputs.data[i]) q_changed = true;
  for (std::size_t i = 0; i < a_after.outputs.data.size(); ++i)
    if (a_after.outputs.data[i] != a_before.outputs.data[i]) a_changed = true;
  CHECK(q_changed);
  CHECK(a_changed);
}

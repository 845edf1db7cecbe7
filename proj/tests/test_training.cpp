#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "qarank/training.hpp"

using namespace qarank;

namespace {

ModelParams toy_model(ModelVariant variant, std::uint64_t seed) {
  Rng rng(seed);
  return make_random_model(variant, /*vocab=*/12, /*embed_dim=*/4, /*hidden=*/5,
                           /*attention_dim=*/6, /*filters=*/3, /*filter_width=*/2,
                           /*kmax=*/1, rng, 0.3);
}

}  // namespace

TEST_CASE("sample_negative forced choice") {
  QAExample q;
  q.ground_truth = {"g"};
  Rng rng(80);
  for (int i = 0; i < 20; ++i)
    CHECK(sample_negative(q, {"g", "n"}, rng) == "n");
}

TEST_CASE("sample_negative never returns a ground truth") {
  QAExample q;
  q.ground_truth = {"a7"};
  std::vector<std::string> pool;
  for (int i = 0; i < 500; ++i) pool.push_back("a" + std::to_string(i));
  Rng rng(81);
  for (int i = 0; i < 100000; ++i)
    CHECK(sample_negative(q, pool, rng) != "a7");
}

TEST_CASE("sample_negative uniform over candidates") {
  QAExample q;
  q.ground_truth = {"a0"};
  std::vector<std::string> pool;
  for (int i = 0; i < 10; ++i) pool.push_back("a" + std::to_string(i));
  Rng rng(83);
  std::unordered_map<std::string, int> counts;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) counts[sample_negative(q, pool, rng)]++;
  // chi-square against uniform over the 9 legal negatives; critical value for
  // 8 degrees of freedom at alpha = 0.01 is 20.09
  const double expect = draws / 9.0;
  double chi2 = 0.0;
  for (int i = 1; i < 10; ++i) {
    const double o = counts["a" + std::to_string(i)];
    chi2 += (o - expect) * (o - expect) / expect;
  }
  CHECK(chi2 < 20.09);
}

TEST_CASE("sample_negative with no legal negative errors") {
  QAExample q;
  q.ground_truth = {"g"};
  Rng rng(83);
  CHECK_THROWS_AS(sample_negative(q, {"g"}, rng), Error);
}

TEST_CASE("dropout_mask p=0 and eval mode give all ones") {
  Rng rng(84);
  for (double v : dropout_mask(16, 0.0, rng, true)) CHECK(v == 1.0);
  for (double v : dropout_mask(16, 0.7, rng, false)) CHECK(v == 1.0);
}

TEST_CASE("dropout_mask keep statistics at p=0.5") {
  Rng rng(85);
  const std::size_t n = 100000;
  Vector mask = dropout_mask(n, 0.5, rng, true);
  std::size_t kept = 0;
  for (double v : mask) {
    if (v != 0.0) {
      CHECK(v == doctest::Approx(2.0));
      ++kept;
    }
  }
  const double rate = static_cast<double>(kept) / static_cast<double>(n);
  CHECK(rate == doctest::Approx(0.5).epsilon(0.02));
  CHECK(std::fabs(rate - 0.5) < 0.01);
}

TEST_CASE("sgd_step basics") {
  ModelParams params = toy_model(ModelVariant::LstmMax, 86);
  GradientSet grads = GradientSet::zeros_like(params);

  SUBCASE("zero gradient leaves parameters bit-unchanged") {
    const std::vector<double> before = params.embeddings.vectors.data;
    const Matrix w_before = params.bilstm.forward.W_i;
    sgd_step(params, grads, 0.1);
    CHECK(params.embeddings.vectors.data == before);
    CHECK(params.bilstm.forward.W_i.data == w_before.data);
  }

  SUBCASE("w <- w - lr g") {
    params.bilstm.forward.W_i.at(0, 0) = 1.0;
    grads.bilstm.forward.W_i.at(0, 0) = 2.0;
    sgd_step(params, grads, 0.1);
    CHECK(params.bilstm.forward.W_i.at(0, 0) == doctest::Approx(0.8));
  }

  SUBCASE("two lr steps equal one 2-lr step on a fixed gradient") {
    ModelParams twin = toy_model(ModelVariant::LstmMax, 86);
    grads.bilstm.forward.b_c[2] = 1.5;
    grads.embeddings.at(3, 1) = -0.4;
    sgd_step(params, grads, 0.05);
    sgd_step(params, grads, 0.05);
    sgd_step(twin, grads, 0.1);
    CHECK(params.bilstm.forward.b_c[2] ==
          doctest::Approx(twin.bilstm.forward.b_c[2]).epsilon(1e-15));
    CHECK(params.embeddings.vectors.at(3, 1) ==
          doctest::Approx(twin.embeddings.vectors.at(3, 1)).epsilon(1e-15));
  }

  SUBCASE("PAD embedding row never moves") {
    for (double& v : grads.embeddings.data) v = 1.0;
    sgd_step(params, grads, 0.1);
    for (std::size_t j = 0; j < params.embed_dim(); ++j)
      CHECK(params.embeddings.vectors.at(0, j) == 0.0);
  }

  SUBCASE("frozen embeddings are not updated") {
    params.embeddings.trainable = false;
    const std::vector<double> before = params.embeddings.vectors.data;
    for (double& v : grads.embeddings.data) v = 1.0;
    sgd_step(params, grads, 0.1);
    CHECK(params.embeddings.vectors.data == before);
  }
}

TEST_CASE("train_epoch expansion, determinism and learning") {
  // Toy dataset: 3 questions over vocab ids 2..11; the last question carries
  // 3 ground truths, so one epoch sees 5 (question, truth) instances.
  AnswerStore store;
  for (int i = 0; i < 6; ++i) {
    const std::string id = "a" + std::to_string(i);
    store.ids.push_back(id);
    store.answers[id] = {2 + i, 3 + i};
  }
  std::vector<QAExample> examples(3);
  examples[0] = {"q0", {2, 3}, {"a0"}, {}};
  examples[1] = {"q1", {4, 5}, {"a1"}, {}};
  examples[2] = {"q2", {6, 7}, {"a2", "a3", "a4"}, {}};
  const std::vector<std::string> negatives = store.ids;

  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.max_length = 10;
  cfg.margin = 0.2;
  cfg.learning_rate = 0.05;
  cfg.dropout = 0.0;
  cfg.negatives = 10;
  cfg.seed = 5;

  SUBCASE("each ground truth becomes one instance") {
    ModelParams params = toy_model(ModelVariant::LstmMax, 87);
    Rng rng(cfg.seed);
    EpochStats stats = train_epoch(examples, store, negatives, params, cfg, rng);
    CHECK(stats.examples == 5);
    CHECK(stats.trained + stats.skipped == 5);
  }

  SUBCASE("identical seeds give bit-identical parameters") {
    ModelParams p1 = toy_model(ModelVariant::LstmMax, 88);
    ModelParams p2 = toy_model(ModelVariant::LstmMax, 88);
    Rng r1(cfg.seed), r2(cfg.seed);
    for (int e = 0; e < 3; ++e) {
      train_epoch(examples, store, negatives, p1, cfg, r1);
      train_epoch(examples, store, negatives, p2, cfg, r2);
    }
    CHECK(p1.embeddings.vectors.data == p2.embeddings.vectors.data);
    CHECK(p1.bilstm.forward.W_i.data == p2.bilstm.forward.W_i.data);
    CHECK(p1.bilstm.backward.U_o.data == p2.bilstm.backward.U_o.data);
  }

  SUBCASE("mean loss decreases over epochs on the toy set") {
    ModelParams params = toy_model(ModelVariant::LstmMax, 89);
    Rng rng(cfg.seed);
    EpochStats first = train_epoch(examples, store, negatives, params, cfg, rng);
    EpochStats last{};
    for (int e = 0; e < 15; ++e)
      last = train_epoch(examples, store, negatives, params, cfg, rng);
    CHECK(last.mean_loss < first.mean_loss);
  }

  SUBCASE("an already-perfect model is a no-op") {
    // Negative cap K exhausted on every instance: with margin 0 and identical
    // positive/negative scores impossible, so instead freeze by making all
    // pool answers ground truths except one and margin tiny after training.
    ModelParams params = toy_model(ModelVariant::LstmMax, 90);
    Rng rng(cfg.seed);
    for (int e = 0; e < 60; ++e)
      train_epoch(examples, store, negatives, params, cfg, rng);
    Rng rng2(999);
    ModelParams before = params;
    EpochStats stats = train_epoch(examples, store, negatives, params, cfg, rng2);
    if (stats.trained == 0) {
      CHECK(stats.mean_loss == 0.0);
      CHECK(params.embeddings.vectors.data == before.embeddings.vectors.data);
      CHECK(params.bilstm.forward.W_c.data == before.bilstm.forward.W_c.data);
    }
    CHECK(stats.skipped == stats.examples - stats.trained);
  }
}

TEST_CASE("grad_check passes for every variant at toy sizes") {
  for (int vi = 0; vi < 7; ++vi) {
    GradCheckReport report = grad_check(static_cast<ModelVariant>(vi), 7);
    INFO("variant ", variant_name(static_cast<ModelVariant>(vi)));
    CHECK(report.ok());
  }
}

TEST_CASE("grad_check is deterministic per seed") {
  GradCheckReport a = grad_check(ModelVariant::AttAvg, 11);
  GradCheckReport b = grad_check(ModelVariant::AttAvg, 11);
  REQUIRE(a.entries.size() == b.entries.size());
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    CHECK(a.entries[i].tensor == b.entries[i].tensor);
    CHECK(a.entries[i].max_rel_error == b.entries[i].max_rel_error);
  }
}

TEST_CASE("grad_check detects an injected gradient fault") {
  GradCheckReport report =
      grad_check(ModelVariant::LstmMax, 7, {}, "lstm_fwd.W_i");
  CHECK_FALSE(report.ok());
  bool named = false;
  for (const auto& e : report.entries)
    if (e.tensor == "lstm_fwd.W_i" && e.max_rel_error > 1e-4) named = true;
  CHECK(named);
}

TEST_CASE("max pooling gradient lands only on argmax timesteps") {
  ModelParams params = toy_model(ModelVariant::LstmMax, 91);
  const std::vector<int> q = {2, 3, 4};
  const std::vector<int> pos = {5, 6, 7};
  const std::vector<int> neg = {8, 9, 10};
  LossCache cache;
  forward_loss(q, pos, neg, params, 5.0, nullptr, &cache);
  const PoolCache& pc = cache.pos_pair.cache.a_pool;
  REQUIRE(pc.strategy == PoolStrategy::Max);
  Matrix d(cache.pos_enc.outputs.rows, cache.pos_enc.outputs.cols);
  Vector d_repr(cache.pos_pair.a_repr.size(), 1.0);
  pool_backward(d_repr, pc, d);
  for (std::size_t col = 0; col < d.cols; ++col) {
    for (std::size_t t = 0; t < d.rows; ++t) {
      if (t == pc.argmax[col])
        CHECK(d.at(t, col) == 1.0);
      else
        CHECK(d.at(t, col) == 0.0);
    }
  }
}

TEST_CASE("TrainConfig validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  TrainConfig bad = cfg;
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.dropout = 1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.negatives = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

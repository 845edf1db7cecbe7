#include "qarank/engine.hpp"

#include "qarank/training.hpp"

namespace qarank {

BuiltModel build_model(const RunConfig& cfg, Rng& rng) {
  if (cfg.embeddings_path.empty()) throw Error("config: embeddings path not set");
  auto [vocab, table] = load_word2vec_text(cfg.embeddings_path, rng);
  table.trainable = cfg.trainable_embeddings;

  BuiltModel out;
  out.vocab = std::move(vocab);
  out.params.embeddings = std::move(table);
  out.params.variant = variant_from_name(cfg.variant);
  out.params.similarity = similarity_from_name(cfg.similarity);
  out.params.gesd_config = {cfg.gesd_gamma, cfg.gesd_c};
  out.params.bilstm =
      BiLstmParams::random(cfg.hidden_size, out.params.embeddings.dim, rng);
  if (variant_uses_cnn(out.params.variant)) {
    out.params.cnn = CnnParams::random(cfg.filter_count, cfg.filter_width,
                                       2 * cfg.hidden_size, cfg.kmax, rng);
  }
  if (variant_uses_attention(out.params.variant)) {
    const std::size_t d = cfg.attention_dim ? cfg.attention_dim : 2 * cfg.hidden_size;
    out.params.attention = AttentionParams::random(d, 2 * cfg.hidden_size, rng);
  }
  if (cfg.att_query_pool == "avg") out.params.att_query_pool = PoolStrategy::Avg;
  if (cfg.att_query_pool == "max") out.params.att_query_pool = PoolStrategy::Max;
  return out;
}

EvalOutput rank_dataset(const Dataset& data, const ModelParams& params,
                        std::size_t max_length) {
  EvalOutput out;
  for (const QAExample& ex : data.examples) {
    if (!ex.has_pool()) {
      throw Error("example \"" + ex.question_id + "\" has no candidate pool");
    }
    const std::vector<int> q = truncate_tokens(ex.question, max_length);
    const EncodedSequence q_enc = encode_tokens(q, params);
    std::vector<std::pair<std::string, double>> scores;
    scores.reserve(ex.pool.size());
    for (const std::string& aid : ex.pool) {
      const std::vector<int> a = truncate_tokens(data.store.tokens(aid), max_length);
      scores.emplace_back(aid, score_pair(q_enc, a, params));
    }
    out.pools.push_back(
        rank_pool(ex.question_id, std::move(scores),
                  {ex.ground_truth.begin(), ex.ground_truth.end()}));
    out.bucket_labels.push_back(bucket_of(ex, data.store));
  }
  return out;
}

double metric_value(const std::vector<RankedPool>& pools, const std::string& name) {
  if (name == "top1") return top1_accuracy(pools);
  if (name == "map") return mean_average_precision(pools);
  if (name == "mrr") return mean_reciprocal_rank(pools);
  throw Error("unknown metric: \"" + name + "\"");
}

EvalOutput rank_dataset_bow(const Dataset& data, const EmbeddingTable& table,
                            const IdfTable& idf) {
  auto safe_cosine = [](const Vector& a, const Vector& b) {
    const double na = norm(a), nb = norm(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / (na * nb);
  };
  EvalOutput out;
  for (const QAExample& ex : data.examples) {
    if (!ex.has_pool()) {
      throw Error("example \"" + ex.question_id + "\" has no candidate pool");
    }
    const Vector q = bow_embed(ex.question, table, idf);
    std::vector<std::pair<std::string, double>> scores;
    for (const std::string& aid : ex.pool) {
      scores.emplace_back(aid, safe_cosine(q, bow_embed(data.store.tokens(aid), table, idf)));
    }
    out.pools.push_back(
        rank_pool(ex.question_id, std::move(scores),
                  {ex.ground_truth.begin(), ex.ground_truth.end()}));
    out.bucket_labels.push_back(bucket_of(ex, data.store));
  }
  return out;
}

}  // namespace qarank

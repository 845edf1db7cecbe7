#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "qarank/rng.hpp"
#include "qarank/tensor.hpp"

namespace qarank {

/// Token-id assignment with two reserved slots: PAD=0 and UNK=1.
struct Vocabulary {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  std::unordered_map<std::string, int> token_to_id;
  std::vector<std::string> id_to_token;

  static Vocabulary with_specials();

  std::size_t size() const { return id_to_token.size(); }
  int add(const std::string& token);
  int id_or_unk(const std::string& token) const;
};

struct EmbeddingTable {
  std::size_t dim = 0;
  Matrix vectors;  // vocab x dim; row 0 (PAD) is all zero
  bool trainable = true;
};

/// Per-token-id idf weights, ln(N / (1 + df)) floored at 0.
struct IdfTable {
  std::vector<double> weights;

  double at(int id) const {
    return (id >= 0 && static_cast<std::size_t>(id) < weights.size())
               ? weights[static_cast<std::size_t>(id)]
               : 0.0;
  }
};

// Parses word2vec text format: header "<count> <dim>", then one
// "<token> v1 ... v_dim" line per word. PAD stays zero; UNK is initialized
// uniformly in [-0.1, 0.1] from rng.
std::pair<Vocabulary, EmbeddingTable> load_word2vec_text(const std::string& path,
                                                         Rng& rng);

Matrix lookup_sequence(const std::vector<int>& ids, const EmbeddingTable& table);

IdfTable compute_idf(const std::vector<std::vector<int>>& docs,
                     std::size_t vocab_size);

// idf-weighted sum of embedding rows.
Vector bow_embed(const std::vector<int>& ids, const EmbeddingTable& table,
                 const IdfTable& idf);

}  // namespace qarank

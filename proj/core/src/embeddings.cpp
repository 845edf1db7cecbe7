#include "qarank/embeddings.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace qarank {

Vocabulary Vocabulary::with_specials() {
  Vocabulary v;
  v.add("<pad>");
  v.add("<unk>");
  return v;
}

int Vocabulary::add(const std::string& token) {
  auto it = token_to_id.find(token);
  if (it != token_to_id.end()) return it->second;
  const int id = static_cast<int>(id_to_token.size());
  token_to_id.emplace(token, id);
  id_to_token.push_back(token);
  return id;
}

int Vocabulary::id_or_unk(const std::string& token) const {
  auto it = token_to_id.find(token);
  return it == token_to_id.end() ? kUnk : it->second;
}

std::pair<Vocabulary, EmbeddingTable> load_word2vec_text(const std::string& path,
                                                         Rng& rng) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embeddings file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw Error(path + ": malformed header (empty file)");
  std::istringstream header(line);
  long long count = -1, dim = -1;
  if (!(header >> count >> dim) || count < 0 || dim <= 0) {
    throw Error(path + ": malformed header: \"" + line + "\"");
  }

  Vocabulary vocab = Vocabulary::with_specials();
  EmbeddingTable table;
  table.dim = static_cast<std::size_t>(dim);
  table.vectors = Matrix(static_cast<std::size_t>(count) + 2, table.dim);

  // UNK row: seeded uniform init, PAD stays zero.
  for (std::size_t j = 0; j < table.dim; ++j) {
    table.vectors.at(Vocabulary::kUnk, j) = rng.uniform(-0.1, 0.1);
  }

  std::size_t line_no = 1;
  for (long long w = 0; w < count; ++w) {
    if (!std::getline(in, line)) {
      throw Error(path + ": expected " + std::to_string(count) +
                  " embedding lines, got " + std::to_string(w));
    }
    ++line_no;
    std::istringstream row(line);
    std::string token;
    if (!(row >> token)) {
      throw Error(path + ":" + std::to_string(line_no) + ": empty embedding line");
    }
    if (vocab.token_to_id.count(token)) {
      throw Error(path + ":" + std::to_string(line_no) + ": duplicate token \"" +
                  token + "\"");
    }
    const int id = vocab.add(token);
    for (std::size_t j = 0; j < table.dim; ++j) {
      double value;
      if (!(row >> value)) {
        throw Error(path + ":" + std::to_string(line_no) + ": expected " +
                    std::to_string(table.dim) + " values for token \"" + token +
                    "\"");
      }
      table.vectors.at(static_cast<std::size_t>(id), j) = value;
    }
    double extra;
    if (row >> extra) {
      throw Error(path + ":" + std::to_string(line_no) + ": too many values for token \"" +
                  token + "\"");
    }
  }
  return {std::move(vocab), std::move(table)};
}

Matrix lookup_sequence(const std::vector<int>& ids, const EmbeddingTable& table) {
  Matrix out(ids.size(), table.dim);
  for (std::size_t t = 0; t < ids.size(); ++t) {
    const int id = ids[t];
    if (id < 0 || static_cast<std::size_t>(id) >= table.vectors.rows) {
      throw Error("lookup_sequence: token id " + std::to_string(id) +
                  " out of range (vocab " + std::to_string(table.vectors.rows) + ")");
    }
    const double* src = table.vectors.row(static_cast<std::size_t>(id));
    double* dst = out.row(t);
    for (std::size_t j = 0; j < table.dim; ++j) dst[j] = src[j];
  }
  return out;
}

IdfTable compute_idf(const std::vector<std::vector<int>>& docs,
                     std::size_t vocab_size) {
  if (docs.empty()) throw Error("compute_idf: empty corpus");
  std::vector<std::size_t> df(vocab_size, 0);
  std::vector<bool> seen(vocab_size, false);
  for (const auto& doc : docs) {
    for (int id : doc) {
      if (id >= 0 && static_cast<std::size_t>(id) < vocab_size) {
        seen[static_cast<std::size_t>(id)] = true;
      }
    }
    for (int id : doc) {
      if (id >= 0 && static_cast<std::size_t>(id) < vocab_size &&
          seen[static_cast<std::size_t>(id)]) {
        ++df[static_cast<std::size_t>(id)];
        seen[static_cast<std::size_t>(id)] = false;
      }
    }
  }
  IdfTable idf;
  idf.weights.resize(vocab_size);
  const double n = static_cast<double>(docs.size());
  for (std::size_t i = 0; i < vocab_size; ++i) {
    const double w = std::log(n / (1.0 + static_cast<double>(df[i])));
    idf.weights[i] = w > 0.0 ? w : 0.0;
  }
  return idf;
}

Vector bow_embed(const std::vector<int>& ids, const EmbeddingTable& table,
                 const IdfTable& idf) {
  if (ids.empty()) throw Error("bow_embed: empty token sequence");
  Vector out(table.dim, 0.0);
  for (int id : ids) {
    const double w = idf.at(id);
    if (w == 0.0) continue;
    const double* row = table.vectors.row(static_cast<std::size_t>(id));
    for (std::size_t j = 0; j < table.dim; ++j) out[j] += w * row[j];
  }
  return out;
}

}  // namespace qarank

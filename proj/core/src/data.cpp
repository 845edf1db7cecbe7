#include "qarank/data.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "qarank/rng.hpp"

namespace qarank {
namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<int> tokenize(const std::string& text, const Vocabulary& vocab) {
  std::vector<int> ids;
  std::istringstream in(text);
  std::string token;
  while (in >> token) ids.push_back(vocab.id_or_unk(token));
  return ids;
}

std::string detokenize(const std::vector<int>& ids, const Vocabulary& vocab) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out.push_back(' ');
    out += vocab.id_to_token[static_cast<std::size_t>(ids[i])];
  }
  return out;
}

std::vector<std::string> split_ids(const std::string& field) {
  std::vector<std::string> out;
  for (const std::string& id : split(field, ',')) {
    if (!id.empty()) out.push_back(id);
  }
  return out;
}

}  // namespace

const std::vector<int>& AnswerStore::tokens(const std::string& id) const {
  auto it = answers.find(id);
  if (it == answers.end()) throw Error("unknown answer id \"" + id + "\"");
  return it->second;
}

Dataset parse_canonical(const std::string& qpath, const std::string& apath,
                        const Vocabulary& vocab) {
  Dataset data;

  std::ifstream ain(apath);
  if (!ain) throw Error("cannot open answer file: " + apath);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ain, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() != 2) {
      throw Error(apath + ":" + std::to_string(line_no) +
                  ": expected \"<id>\\t<tokens>\"");
    }
    if (data.store.answers.count(fields[0])) {
      throw Error(apath + ":" + std::to_string(line_no) + ": duplicate answer id \"" +
                  fields[0] + "\"");
    }
    std::vector<int> tokens = tokenize(fields[1], vocab);
    if (tokens.empty()) {
      throw Error(apath + ":" + std::to_string(line_no) + ": empty answer \"" +
                  fields[0] + "\"");
    }
    data.store.answers.emplace(fields[0], std::move(tokens));
    data.store.ids.push_back(fields[0]);
  }

  std::ifstream qin(qpath);
  if (!qin) throw Error("cannot open question file: " + qpath);
  std::unordered_set<std::string> seen_q;
  line_no = 0;
  while (std::getline(qin, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() != 4) {
      throw Error(qpath + ":" + std::to_string(line_no) +
                  ": expected \"<id>\\t<tokens>\\t<gt-ids>\\t<pool-ids|->\"");
    }
    QAExample ex;
    ex.question_id = fields[0];
    if (!seen_q.insert(ex.question_id).second) {
      throw Error(qpath + ":" + std::to_string(line_no) + ": duplicate question id \"" +
                  ex.question_id + "\"");
    }
    ex.question = tokenize(fields[1], vocab);
    if (ex.question.empty()) {
      throw Error(qpath + ":" + std::to_string(line_no) + ": empty question");
    }
    ex.ground_truth = split_ids(fields[2]);
    if (ex.ground_truth.empty()) {
      throw Error(qpath + ":" + std::to_string(line_no) + ": no ground truth ids");
    }
    for (const std::string& id : ex.ground_truth) {
      if (!data.store.answers.count(id)) {
        throw Error(qpath + ":" + std::to_string(line_no) +
                    ": ground truth id \"" + id + "\" not in answer file");
      }
    }
    if (fields[3] != "-") {
      ex.pool = split_ids(fields[3]);
      if (ex.pool.empty()) {
        throw Error(qpath + ":" + std::to_string(line_no) + ": empty pool field");
      }
      std::unordered_set<std::string> pool_set;
      for (const std::string& id : ex.pool) {
        if (!data.store.answers.count(id)) {
          throw Error(qpath + ":" + std::to_string(line_no) + ": pool id \"" + id +
                      "\" not in answer file");
        }
        if (!pool_set.insert(id).second) {
          throw Error(qpath + ":" + std::to_string(line_no) + ": duplicate pool id \"" +
                      id + "\"");
        }
      }
      for (const std::string& id : ex.ground_truth) {
        if (!pool_set.count(id)) {
          throw Error(qpath + ":" + std::to_string(line_no) +
                      ": ground truth id \"" + id + "\" missing from pool");
        }
      }
    }
    data.examples.push_back(std::move(ex));
  }
  return data;
}

void write_canonical(const std::string& qpath, const std::string& apath,
                     const Dataset& data, const Vocabulary& vocab) {
  std::ofstream aout(apath);
  if (!aout) throw Error("cannot write answer file: " + apath);
  for (const std::string& id : data.store.ids) {
    aout << id << '\t' << detokenize(data.store.answers.at(id), vocab) << '\n';
  }
  std::ofstream qout(qpath);
  if (!qout) throw Error("cannot write question file: " + qpath);
  for (const QAExample& ex : data.examples) {
    qout << ex.question_id << '\t' << detokenize(ex.question, vocab) << '\t';
    for (std::size_t i = 0; i < ex.ground_truth.size(); ++i) {
      if (i) qout << ',';
      qout << ex.ground_truth[i];
    }
    qout << '\t';
    if (ex.pool.empty()) {
      qout << '-';
    } else {
      for (std::size_t i = 0; i < ex.pool.size(); ++i) {
        if (i) qout << ',';
        qout << ex.pool[i];
      }
    }
    qout << '\n';
  }
}

Dataset parse_trecqa(const std::string& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trecqa file: " + path);

  Dataset data;
  std::string line;
  std::size_t line_no = 0;
  std::size_t q_counter = 0;

  std::vector<int> question;
  std::vector<std::pair<int, std::vector<int>>> candidates;  // label, tokens
  bool in_block = false;

  auto flush = [&]() {
    if (!in_block) return;
    if (candidates.empty()) throw Error(path + ": question block with no candidates");
    bool any_pos = false, any_neg = false;
    for (const auto& [label, tokens] : candidates) {
      (label ? any_pos : any_neg) = true;
    }
    if (!any_pos || !any_neg) {
      ++data.dropped_questions;  // all-positive or all-negative questions removed
    } else {
      QAExample ex;
      ++q_counter;
      ex.question_id = "q" + std::to_string(q_counter);
      ex.question = question;
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        const std::string aid = ex.question_id + "_a" + std::to_string(i + 1);
        data.store.answers.emplace(aid, candidates[i].second);
        data.store.ids.push_back(aid);
        ex.pool.push_back(aid);
        if (candidates[i].first) ex.ground_truth.push_back(aid);
      }
      data.examples.push_back(std::move(ex));
    }
    question.clear();
    candidates.clear();
    in_block = false;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      flush();
      continue;
    }
    auto fields = split(line, '\t');
    if (fields.size() != 2) {
      throw Error(path + ":" + std::to_string(line_no) +
                  ": expected \"Q\\t<tokens>\" or \"<0|1>\\t<tokens>\"");
    }
    if (fields[0] == "Q") {
      flush();
      question = tokenize(fields[1], vocab);
      if (question.empty()) {
        throw Error(path + ":" + std::to_string(line_no) + ": empty question");
      }
      in_block = true;
    } else {
      if (!in_block) {
        throw Error(path + ":" + std::to_string(line_no) + ": candidate before question");
      }
      int label;
      if (fields[0] == "0") {
        label = 0;
      } else if (fields[0] == "1") {
        label = 1;
      } else {
        throw Error(path + ":" + std::to_string(line_no) + ": malformed label \"" +
                    fields[0] + "\"");
      }
      std::vector<int> tokens = tokenize(fields[1], vocab);
      if (tokens.empty()) {
        throw Error(path + ":" + std::to_string(line_no) + ": empty candidate");
      }
      candidates.emplace_back(label, std::move(tokens));
    }
  }
  flush();
  return data;
}

std::vector<int> truncate_tokens(const std::vector<int>& tokens, std::size_t max_len) {
  if (tokens.size() <= max_len) return tokens;
  return {tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(max_len)};
}

TokenBatch pack_batch(const std::vector<std::vector<int>>& seqs, std::size_t max_len) {
  TokenBatch b;
  b.batch = seqs.size();
  b.length = max_len;
  b.ids.assign(b.batch * b.length, Vocabulary::kPad);
  b.mask.assign(b.batch * b.length, 0.0);
  for (std::size_t r = 0; r < seqs.size(); ++r) {
    const std::size_t n = std::min(seqs[r].size(), max_len);
    for (std::size_t t = 0; t < n; ++t) {
      b.ids[r * max_len + t] = seqs[r][t];
      b.mask[r * max_len + t] = 1.0;
    }
  }
  return b;
}

std::vector<Batch> make_batches(const std::vector<QAExample>& examples,
                                std::size_t batch_size, std::size_t max_len,
                                std::uint64_t shuffle_seed) {
  if (batch_size == 0) throw Error("make_batches: batch size must be >= 1");
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(shuffle_seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.index(i)]);
  }

  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    Batch b;
    std::vector<std::vector<int>> seqs;
    const std::size_t end = std::min(start + batch_size, order.size());
    for (std::size_t i = start; i < end; ++i) {
      b.example_indices.push_back(order[i]);
      seqs.push_back(truncate_tokens(examples[order[i]].question, max_len));
    }
    b.questions = pack_batch(seqs, max_len);
    batches.push_back(std::move(b));
  }
  return batches;
}

const std::vector<std::string>& bucket_labels() {
  static const std::vector<std::string> labels = {
      "<=50", "<=55", "<=60", "<=65", "<=70",  "<=80",
      "<=90", "<=100", "<=120", "<=160", ">160"};
  return labels;
}

std::size_t bucket_index(double avg_gt_length) {
  static const double bounds[] = {50, 55, 60, 65, 70, 80, 90, 100, 120, 160};
  for (std::size_t i = 0; i < 10; ++i) {
    if (avg_gt_length <= bounds[i]) return i;
  }
  return 10;
}

std::string bucket_of(const QAExample& example, const AnswerStore& store) {
  double total = 0.0;
  for (const std::string& id : example.ground_truth) {
    total += static_cast<double>(store.tokens(id).size());
  }
  const double avg = total / static_cast<double>(example.ground_truth.size());
  return bucket_labels()[bucket_index(avg)];
}

}  // namespace qarank

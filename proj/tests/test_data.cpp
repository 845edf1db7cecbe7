#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>
#include <unistd.h>

#include "qarank/data.hpp"

using namespace qarank;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& contents) {
    char tmpl[] = "/tmp/qarank_data_XXXXXX";
    const int fd = mkstemp(tmpl);
    REQUIRE(fd >= 0);
    close(fd);
    path = tmpl;
    std::ofstream out(path, std::ios::binary);
    out << contents;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

Vocabulary small_vocab() {
  Vocabulary v = Vocabulary::with_specials();
  for (const char* t : {"how", "do", "i", "file", "a", "claim", "call", "us",
                        "online", "form"})
    v.add(t);
  return v;
}

}  // namespace

TEST_CASE("parse_canonical well-formed input") {
  TempFile answers("a1\tcall us\na2\tonline form\n");
  TempFile questions("q1\thow do i file\ta1\ta1,a2\n");
  Vocabulary vocab = small_vocab();
  Dataset data = parse_canonical(questions.path, answers.path, vocab);
  REQUIRE(data.examples.size() == 1);
  const QAExample& ex = data.examples[0];
  CHECK(ex.question_id == "q1");
  CHECK(ex.question.size() == 4);
  CHECK(ex.ground_truth == std::vector<std::string>{"a1"});
  CHECK(ex.pool == std::vector<std::string>{"a1", "a2"});
  CHECK(data.store.tokens("a1").size() == 2);
  CHECK(data.store.tokens("a2")[0] == vocab.id_or_unk("online"));
}

TEST_CASE("parse_canonical pool dash means no pool") {
  TempFile answers("a1\tcall us\n");
  TempFile questions("q1\thow do i\ta1\t-\n");
  Dataset data = parse_canonical(questions.path, answers.path, small_vocab());
  CHECK_FALSE(data.examples[0].has_pool());
}

TEST_CASE("parse_canonical OOV tokens map to UNK") {
  TempFile answers("a1\tzebra\n");
  TempFile questions("q1\tquagga\ta1\t-\n");
  Dataset data = parse_canonical(questions.path, answers.path, small_vocab());
  CHECK(data.examples[0].question[0] == Vocabulary::kUnk);
  CHECK(data.store.tokens("a1")[0] == Vocabulary::kUnk);
}

TEST_CASE("parse_canonical errors") {
  Vocabulary vocab = small_vocab();
  SUBCASE("ground truth missing from answer file") {
    TempFile answers("a1\tcall us\n");
    TempFile questions("q1\thow do i\ta9\t-\n");
    CHECK_THROWS_WITH_AS(parse_canonical(questions.path, answers.path, vocab),
                         doctest::Contains("a9"), Error);
  }
  SUBCASE("ground truth outside the pool") {
    TempFile answers("a1\tcall us\na2\tonline form\n");
    TempFile questions("q1\thow do i\ta1\ta2\n");
    CHECK_THROWS_AS(parse_canonical(questions.path, answers.path, vocab), Error);
  }
  SUBCASE("duplicate answer id names the line") {
    TempFile answers("a1\tcall us\na1\tonline form\n");
    TempFile questions("q1\thow do i\ta1\t-\n");
    CHECK_THROWS_WITH_AS(parse_canonical(questions.path, answers.path, vocab),
                         doctest::Contains("2"), Error);
  }
  SUBCASE("duplicate question id") {
    TempFile answers("a1\tcall us\n");
    TempFile questions("q1\thow\ta1\t-\nq1\tdo\ta1\t-\n");
    CHECK_THROWS_AS(parse_canonical(questions.path, answers.path, vocab), Error);
  }
}

TEST_CASE("canonical roundtrip preserves structures") {
  TempFile answers("a1\tcall us\na2\tonline form\na3\tfile a claim\n");
  TempFile questions(
      "q1\thow do i file\ta1,a3\ta1,a2,a3\n"
      "q2\tcall us online\ta2\t-\n");
  Vocabulary vocab = small_vocab();
  Dataset data = parse_canonical(questions.path, answers.path, vocab);

  TempFile out_q(""), out_a("");
  write_canonical(out_q.path, out_a.path, data, vocab);
  Dataset again = parse_canonical(out_q.path, out_a.path, vocab);

  REQUIRE(again.examples.size() == data.examples.size());
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    CHECK(again.examples[i].question_id == data.examples[i].question_id);
    CHECK(again.examples[i].question == data.examples[i].question);
    CHECK(again.examples[i].ground_truth == data.examples[i].ground_truth);
    CHECK(again.examples[i].pool == data.examples[i].pool);
  }
  CHECK(again.store.ids == data.store.ids);
  for (const auto& id : data.store.ids)
    CHECK(again.store.tokens(id) == data.store.tokens(id));
}

TEST_CASE("parse_trecqa keeps mixed blocks and drops pure ones") {
  TempFile f(
      "Q\thow do i file\n"
      "1\tfile a claim online\n"
      "0\tcall us\n"
      "0\tonline form\n"
      "\n"
      "Q\tcall us\n"
      "0\tonline\n"
      "0\tform\n"
      "\n"
      "Q\thow do i\n"
      "1\tcall\n"
      "1\tus\n");
  Dataset data = parse_trecqa(f.path, small_vocab());
  REQUIRE(data.examples.size() == 1);  // the all-neg and all-pos blocks drop
  CHECK(data.dropped_questions == 2);
  const QAExample& ex = data.examples[0];
  CHECK(ex.ground_truth.size() == 1);
  CHECK(ex.pool.size() == 3);
  CHECK(data.store.tokens(ex.ground_truth[0]).size() == 4);
}

TEST_CASE("parse_trecqa malformed label errors") {
  TempFile f("Q\thow\n2\tcall us\n");
  CHECK_THROWS_AS(parse_trecqa(f.path, small_vocab()), Error);
}

TEST_CASE("truncate_tokens discards the tail") {
  std::vector<int> tokens(250, 3);
  CHECK(truncate_tokens(tokens, 200).size() == 200);
  CHECK(truncate_tokens(tokens, 300).size() == 250);
}

TEST_CASE("pack_batch pads and masks") {
  TokenBatch batch = pack_batch({{2, 3, 4}, {5}}, 5);
  CHECK(batch.batch == 2);
  CHECK(batch.length == 5);
  const std::vector<int> row0 = batch.row_ids(0);
  CHECK(row0 == std::vector<int>{2, 3, 4, 0, 0});
  const std::vector<double> want_mask0 = {1, 1, 1, 0, 0};
  for (std::size_t i = 0; i < 5; ++i) CHECK(batch.mask[i] == want_mask0[i]);
  const std::vector<double> want_mask1 = {1, 0, 0, 0, 0};
  for (std::size_t i = 0; i < 5; ++i) CHECK(batch.mask[5 + i] == want_mask1[i]);
}

TEST_CASE("pack_batch prefix-mask property on random lengths") {
  Rng rng(70);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t max_len = 1 + rng.index(12);
    std::vector<std::vector<int>> seqs(1 + rng.index(5));
    for (auto& s : seqs) {
      s.resize(1 + rng.index(15));
      for (int& t : s) t = static_cast<int>(2 + rng.index(8));
    }
    TokenBatch batch = pack_batch(seqs, max_len);
    for (std::size_t r = 0; r < batch.batch; ++r) {
      bool seen_zero = false;
      for (std::size_t c = 0; c < batch.length; ++c) {
        const double m = batch.mask[r * batch.length + c];
        if (m == 0.0) seen_zero = true;
        if (seen_zero) CHECK(m == 0.0);  // prefix-ones pattern
        if (m == 0.0)
          CHECK(batch.ids[r * batch.length + c] == Vocabulary::kPad);
        else
          CHECK(batch.ids[r * batch.length + c] != Vocabulary::kPad);
      }
    }
  }
}

TEST_CASE("make_batches splits and shuffles deterministically") {
  std::vector<QAExample> examples(3);
  for (int i = 0; i < 3; ++i) {
    examples[static_cast<std::size_t>(i)].question_id = "q" + std::to_string(i);
    examples[static_cast<std::size_t>(i)].question = {2, 3};
    examples[static_cast<std::size_t>(i)].ground_truth = {"a"};
  }
  auto batches = make_batches(examples, 2, 10, 9);
  REQUIRE(batches.size() == 2);
  CHECK(batches[0].example_indices.size() == 2);
  CHECK(batches[1].example_indices.size() == 1);

  auto again = make_batches(examples, 2, 10, 9);
  for (std::size_t b = 0; b < batches.size(); ++b)
    CHECK(batches[b].example_indices == again[b].example_indices);
}

TEST_CASE("bucket boundaries") {
  CHECK(bucket_labels().size() == kNumBuckets);
  CHECK(bucket_labels()[bucket_index(58)] == "<=60");
  CHECK(bucket_labels()[bucket_index(50)] == "<=50");  // inclusive bound
  CHECK(bucket_labels()[bucket_index(500)] == ">160");
  CHECK(bucket_labels()[bucket_index(1)] == "<=50");
  CHECK(bucket_labels()[bucket_index(160)] == "<=160");
  CHECK(bucket_labels()[bucket_index(160.5)] == ">160");
}

TEST_CASE("bucket partition: every example in exactly one bucket") {
  Rng rng(71);
  for (int trial = 0; trial < 200; ++trial) {
    const double len = rng.uniform(0.0, 400.0);
    const std::size_t idx = bucket_index(len);
    CHECK(idx < kNumBuckets);
  }
}

TEST_CASE("bucket_of averages ground-truth lengths") {
  AnswerStore store;
  store.ids = {"a1", "a2"};
  store.answers["a1"] = std::vector<int>(40, 3);
  store.answers["a2"] = std::vector<int>(80, 3);
  QAExample ex;
  ex.ground_truth = {"a1", "a2"};  // avg length 60
  CHECK(bucket_of(ex, store) == "<=60");
}

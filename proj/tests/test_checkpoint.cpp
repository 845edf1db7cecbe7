#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

#include "qarank/checkpoint.hpp"
#include "qarank/training.hpp"

using namespace qarank;

namespace {

std::string temp_path() {
  char tmpl[] = "/tmp/qarank_ckpt_XXXXXX";
  const int fd = mkstemp(tmpl);
  REQUIRE(fd >= 0);
  close(fd);
  return tmpl;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Vocabulary toy_vocab(std::size_t extra) {
  Vocabulary v = Vocabulary::with_specials();
  for (std::size_t i = 0; i < extra; ++i) v.add("tok" + std::to_string(i));
  return v;
}

ModelParams toy_params(ModelVariant variant, std::uint64_t seed) {
  Rng rng(seed);
  return make_random_model(variant, 10, 4, 5, 6, 3, 2, 1, rng);
}

}  // namespace

TEST_CASE("checkpoint roundtrip is bit-exact for every variant") {
  for (int vi = 0; vi < 7; ++vi) {
    const ModelVariant v = static_cast<ModelVariant>(vi);
    ModelParams params = toy_params(v, 100 + static_cast<std::uint64_t>(vi));
    params.similarity = (vi % 2 == 0) ? Similarity::Cosine : Similarity::Gesd;
    Vocabulary vocab = toy_vocab(8);
    const std::string path1 = temp_path();
    const std::string path2 = temp_path();

    save_checkpoint(params, vocab, "echo line\n", path1);
    LoadedCheckpoint loaded = load_checkpoint(path1);
    save_checkpoint(loaded.params, loaded.vocab, loaded.config_echo, path2);

    CHECK(slurp(path1) == slurp(path2));
    CHECK(loaded.config_echo == "echo line\n");
    CHECK(loaded.vocab.id_to_token == vocab.id_to_token);
    CHECK(loaded.params.variant == v);
    CHECK(loaded.params.similarity == params.similarity);
    CHECK(loaded.params.embeddings.vectors.data ==
          params.embeddings.vectors.data);
    CHECK(loaded.params.bilstm.forward.W_i.data ==
          params.bilstm.forward.W_i.data);
    CHECK(loaded.params.bilstm.backward.b_c == params.bilstm.backward.b_c);
    if (params.cnn) {
      REQUIRE(loaded.params.cnn.has_value());
      CHECK(loaded.params.cnn->filters[0].data == params.cnn->filters[0].data);
      CHECK(loaded.params.cnn->biases == params.cnn->biases);
    }
    if (params.attention) {
      REQUIRE(loaded.params.attention.has_value());
      CHECK(loaded.params.attention->W_qm.data == params.attention->W_qm.data);
      CHECK(loaded.params.attention->w_ms == params.attention->w_ms);
    }
    std::remove(path1.c_str());
    std::remove(path2.c_str());
  }
}

TEST_CASE("checkpoint starts with the magic bytes") {
  ModelParams params = toy_params(ModelVariant::LstmMax, 110);
  const std::string path = temp_path();
  save_checkpoint(params, toy_vocab(3), "", path);
  const std::string bytes = slurp(path);
  REQUIRE(bytes.size() > 7);
  CHECK(bytes.substr(0, 7) == "QALSTM1");
  std::remove(path.c_str());
}

TEST_CASE("corrupted magic is rejected") {
  ModelParams params = toy_params(ModelVariant::LstmMax, 111);
  const std::string path = temp_path();
  save_checkpoint(params, toy_vocab(3), "", path);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.put('X');
  }
  CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("magic"), Error);
  std::remove(path.c_str());
}

TEST_CASE("truncated file is rejected") {
  ModelParams params = toy_params(ModelVariant::AttCnn, 112);
  const std::string path = temp_path();
  save_checkpoint(params, toy_vocab(3), "", path);
  const std::string bytes = slurp(path);
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << bytes.substr(0, bytes.size() / 2);
  }
  CHECK_THROWS_AS(load_checkpoint(path), Error);
  std::remove(path.c_str());
}

TEST_CASE("missing file is an error") {
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/qarank.ckpt"), Error);
}

TEST_CASE("embedding rows survive a checkpoint roundtrip bit-for-bit") {
  // exercises awkward values: denormals, negative zero, extreme exponents
  ModelParams params = toy_params(ModelVariant::LstmAvg, 113);
  params.embeddings.vectors.at(2, 0) = 5e-324;
  params.embeddings.vectors.at(2, 1) = -0.0;
  params.embeddings.vectors.at(3, 0) = 1e308;
  params.embeddings.vectors.at(3, 1) = -1e-308;
  const std::string path = temp_path();
  save_checkpoint(params, toy_vocab(8), "", path);
  LoadedCheckpoint loaded = load_checkpoint(path);
  for (std::size_t i = 0; i < params.embeddings.vectors.data.size(); ++i) {
    const double a = params.embeddings.vectors.data[i];
    const double b = loaded.params.embeddings.vectors.data[i];
    CHECK(std::memcmp(&a, &b, sizeof(double)) == 0);
  }
  std::remove(path.c_str());
}

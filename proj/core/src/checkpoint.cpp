#include "qarank/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace qarank {
namespace {

constexpr char kMagic[7] = {'Q', 'A', 'L', 'S', 'T', 'M', '1'};

void write_u8(std::ostream& out, std::uint8_t v) {
  out.put(static_cast<char>(v));
}

void write_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

void write_u64(std::ostream& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

void write_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  write_u64(out, bits);
}

std::uint8_t read_u8(std::istream& in, const std::string& path) {
  const int c = in.get();
  if (c == EOF) throw Error(path + ": truncated checkpoint");
  return static_cast<std::uint8_t>(c);
}

std::uint32_t read_u32(std::istream& in, const std::string& path) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(read_u8(in, path)) << (8 * i);
  return v;
}

std::uint64_t read_u64(std::istream& in, const std::string& path) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(read_u8(in, path)) << (8 * i);
  return v;
}

double read_f64(std::istream& in, const std::string& path) {
  const std::uint64_t bits = read_u64(in, path);
  double v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in, const std::string& path) {
  const std::uint32_t n = read_u32(in, path);
  std::string s(n, '\0');
  if (n && !in.read(s.data(), n)) throw Error(path + ": truncated checkpoint");
  return s;
}

void write_tensor(std::ostream& out, const Matrix& m) {
  write_u64(out, m.rows);
  write_u64(out, m.cols);
  for (double v : m.data) write_f64(out, v);
}

void write_tensor(std::ostream& out, const Vector& v) {
  write_u64(out, v.size());
  write_u64(out, 1);
  for (double x : v) write_f64(out, x);
}

Matrix read_tensor(std::istream& in, const std::string& path, std::size_t rows,
                   std::size_t cols, const char* name) {
  const std::uint64_t r = read_u64(in, path);
  const std::uint64_t c = read_u64(in, path);
  if (r != rows || c != cols) {
    throw Error(path + ": tensor " + name + " has shape " + std::to_string(r) + "x" +
                std::to_string(c) + ", expected " + std::to_string(rows) + "x" +
                std::to_string(cols));
  }
  Matrix m(rows, cols);
  for (double& v : m.data) v = read_f64(in, path);
  return m;
}

Vector read_vector(std::istream& in, const std::string& path, std::size_t len,
                   const char* name) {
  Matrix m = read_tensor(in, path, len, 1, name);
  return std::move(m.data);
}

void write_lstm(std::ostream& out, const LstmParams& p) {
  for (const Matrix* m : {&p.W_i, &p.W_f, &p.W_o, &p.W_c, &p.U_i, &p.U_f, &p.U_o, &p.U_c}) {
    write_tensor(out, *m);
  }
  for (const Vector* v : {&p.b_i, &p.b_f, &p.b_o, &p.b_c}) write_tensor(out, *v);
}

LstmParams read_lstm(std::istream& in, const std::string& path, std::size_t h,
                     std::size_t e) {
  LstmParams p;
  p.W_i = read_tensor(in, path, h, e, "W_i");
  p.W_f = read_tensor(in, path, h, e, "W_f");
  p.W_o = read_tensor(in, path, h, e, "W_o");
  p.W_c = read_tensor(in, path, h, e, "W_c");
  p.U_i = read_tensor(in, path, h, h, "U_i");
  p.U_f = read_tensor(in, path, h, h, "U_f");
  p.U_o = read_tensor(in, path, h, h, "U_o");
  p.U_c = read_tensor(in, path, h, h, "U_c");
  p.b_i = read_vector(in, path, h, "b_i");
  p.b_f = read_vector(in, path, h, "b_f");
  p.b_o = read_vector(in, path, h, "b_o");
  p.b_c = read_vector(in, path, h, "b_c");
  return p;
}

std::uint8_t encode_query_pool(const std::optional<PoolStrategy>& p) {
  if (!p) return 0;
  return *p == PoolStrategy::Avg ? 1 : 2;
}

std::optional<PoolStrategy> decode_query_pool(std::uint8_t v, const std::string& path) {
  switch (v) {
    case 0: return std::nullopt;
    case 1: return PoolStrategy::Avg;
    case 2: return PoolStrategy::Max;
    default: throw Error(path + ": bad attention query pool tag");
  }
}

}  // namespace

void save_checkpoint(const ModelParams& params, const Vocabulary& vocab,
                     const std::string& config_echo, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint: " + path);
  out.write(kMagic, sizeof kMagic);
  write_string(out, config_echo);

  write_u64(out, vocab.size());
  for (const std::string& token : vocab.id_to_token) write_string(out, token);

  write_u8(out, static_cast<std::uint8_t>(params.variant));
  write_u8(out, static_cast<std::uint8_t>(params.similarity));
  write_u8(out, encode_query_pool(params.att_query_pool));
  write_u8(out, params.embeddings.trainable ? 1 : 0);
  write_f64(out, params.gesd_config.gamma);
  write_f64(out, params.gesd_config.c);
  write_u64(out, params.embed_dim());
  write_u64(out, params.hidden());
  write_u64(out, params.cnn ? 1 : 0);
  if (params.cnn) {
    write_u64(out, params.cnn->count());
    write_u64(out, params.cnn->width);
    write_u64(out, params.cnn->k);
  }
  write_u64(out, params.attention ? 1 : 0);
  if (params.attention) write_u64(out, params.attention->dim());

  write_tensor(out, params.embeddings.vectors);
  write_lstm(out, params.bilstm.forward);
  write_lstm(out, params.bilstm.backward);
  if (params.cnn) {
    for (const Matrix& f : params.cnn->filters) write_tensor(out, f);
    write_tensor(out, params.cnn->biases);
  }
  if (params.attention) {
    write_tensor(out, params.attention->W_am);
    write_tensor(out, params.attention->W_qm);
    write_tensor(out, params.attention->w_ms);
  }
  if (!out) throw Error("write failure on checkpoint: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint: " + path);
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw Error(path + ": bad magic (not a checkpoint file)");
  }

  LoadedCheckpoint ck;
  ck.config_echo = read_string(in, path);

  const std::uint64_t vocab_size = read_u64(in, path);
  for (std::uint64_t i = 0; i < vocab_size; ++i) {
    ck.vocab.add(read_string(in, path));
  }

  ModelParams& p = ck.params;
  const std::uint8_t variant_tag = read_u8(in, path);
  if (variant_tag > static_cast<std::uint8_t>(ModelVariant::AttCnn)) {
    throw Error(path + ": bad variant tag");
  }
  p.variant = static_cast<ModelVariant>(variant_tag);
  const std::uint8_t sim_tag = read_u8(in, path);
  if (sim_tag > 1) throw Error(path + ": bad similarity tag");
  p.similarity = static_cast<Similarity>(sim_tag);
  p.att_query_pool = decode_query_pool(read_u8(in, path), path);
  p.embeddings.trainable = read_u8(in, path) != 0;
  p.gesd_config.gamma = read_f64(in, path);
  p.gesd_config.c = read_f64(in, path);
  const std::uint64_t e = read_u64(in, path);
  const std::uint64_t h = read_u64(in, path);

  std::uint64_t cnn_n = 0, cnn_w = 0, cnn_k = 0;
  const bool has_cnn = read_u64(in, path) != 0;
  if (has_cnn) {
    cnn_n = read_u64(in, path);
    cnn_w = read_u64(in, path);
    cnn_k = read_u64(in, path);
  }
  std::uint64_t attn_d = 0;
  const bool has_attn = read_u64(in, path) != 0;
  if (has_attn) attn_d = read_u64(in, path);

  p.embeddings.dim = e;
  p.embeddings.vectors = read_tensor(in, path, vocab_size, e, "embeddings");
  p.bilstm.forward = read_lstm(in, path, h, e);
  p.bilstm.backward = read_lstm(in, path, h, e);
  if (has_cnn) {
    CnnParams cnn;
    cnn.width = cnn_w;
    cnn.k = cnn_k;
    for (std::uint64_t f = 0; f < cnn_n; ++f) {
      cnn.filters.push_back(read_tensor(in, path, cnn_w, 2 * h, "cnn.filter"));
    }
    cnn.biases = read_vector(in, path, cnn_n, "cnn.biases");
    p.cnn = std::move(cnn);
  }
  if (has_attn) {
    AttentionParams attn;
    attn.W_am = read_tensor(in, path, attn_d, 2 * h, "attn.W_am");
    attn.W_qm = read_tensor(in, path, attn_d, 2 * h, "attn.W_qm");
    attn.w_ms = read_vector(in, path, attn_d, "attn.w_ms");
    p.attention = std::move(attn);
  }
  return ck;
}

}  // namespace qarank

#pragma once

#include <string>

#include "qarank/model.hpp"

namespace qarank {

struct LoadedCheckpoint {
  std::string config_echo;
  Vocabulary vocab;
  ModelParams params;
};

// Custom binary format, little-endian throughout so files are bit-exact
// across platforms:
//   magic   "QALSTM1" (7 bytes)
//   config  u32 length + UTF-8 bytes (echo of the run configuration)
//   vocab   u64 count, then per token u32 length + bytes, in id order
//   header  u8 variant, u8 similarity, u8 att_query_pool (0 auto/1 avg/2 max),
//           u8 trainable_embeddings, f64 gesd gamma, f64 gesd c,
//           u64 E, u64 H, u64 has_cnn [u64 N, u64 width, u64 k],
//           u64 has_attention [u64 D]
//   tensors each as u64 rows, u64 cols, rows*cols f64 values; order:
//           embeddings; forward then backward LSTM (W_i W_f W_o W_c U_i U_f
//           U_o U_c b_i b_f b_o b_c); CNN filters then biases; attention
//           W_am W_qm w_ms. Vectors are stored as n x 1.
void save_checkpoint(const ModelParams& params, const Vocabulary& vocab,
                     const std::string& config_echo, const std::string& path);

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace qarank

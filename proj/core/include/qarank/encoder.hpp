#pragma once

#include <vector>

#include "qarank/rng.hpp"
#include "qarank/tensor.hpp"

namespace qarank {

/// Gate parameters for one LSTM direction.
struct LstmParams {
  Matrix W_i, W_f, W_o, W_c;  // H x E
  Matrix U_i, U_f, U_o, U_c;  // H x H
  Vector b_i, b_f, b_o, b_c;  // H

  std::size_t hidden() const { return b_i.size(); }
  std::size_t input() const { return W_i.cols; }

  static LstmParams zeros(std::size_t hidden, std::size_t input);
  static LstmParams random(std::size_t hidden, std::size_t input, Rng& rng,
                           double scale = 0.1);
};

struct BiLstmParams {
  LstmParams forward;
  LstmParams backward;

  std::size_t hidden() const { return forward.hidden(); }
  std::size_t input() const { return forward.input(); }

  static BiLstmParams random(std::size_t hidden, std::size_t input, Rng& rng,
                             double scale = 0.1);
};

// Gradient buffers share the parameter layout.
using LstmGrads = LstmParams;
using BiLstmGrads = BiLstmParams;

/// Per-step activations retained for backpropagation through time.
struct LstmStepCache {
  std::size_t pos = 0;  // position in the input sequence
  Vector h_prev, c_prev;
  Vector i, f, o, c_bar, c, tanh_c, h;
};

struct LstmCache {
  bool reverse = false;
  std::vector<LstmStepCache> steps;  // in iteration order
};

struct StepResult {
  Vector h, c;
  LstmStepCache cache;
};

struct EncodedSequence {
  Matrix outputs;  // len x 2H, forward || backward; masked-out rows are zero
  Vector mask;     // len, entries in {0,1}
  LstmCache fwd_cache, bwd_cache;

  std::size_t len() const { return outputs.rows; }
};

StepResult lstm_step(const Vector& x_t, const Vector& h_prev, const Vector& c_prev,
                     const LstmParams& p);

// Runs the cell over masked-in steps; h_0 = c_0 = 0, state carried across
// masked-in positions only, masked-out output rows zeroed. When reverse is set
// the iteration order is back-to-front but output rows keep input positions.
Matrix lstm_forward(const Matrix& xs, const Vector& mask, const LstmParams& p,
                    bool reverse, LstmCache* cache = nullptr);

EncodedSequence bilstm_encode(const Matrix& xs, const Vector& mask,
                              const BiLstmParams& p);

// BPTT for one direction. d_outputs is len x H (gradient w.r.t. each output
// row). Accumulates parameter gradients into g and input gradients into d_xs.
void lstm_backward(const Matrix& d_outputs, const Matrix& xs,
                   const LstmCache& cache, const LstmParams& p, LstmGrads& g,
                   Matrix& d_xs);

// d_outputs is len x 2H over the concatenated encoding.
void bilstm_backward(const Matrix& d_outputs, const Matrix& xs,
                     const EncodedSequence& seq, const BiLstmParams& p,
                     BiLstmGrads& g, Matrix& d_xs);

}  // namespace qarank

#include "qarank/encoder.hpp"

#include <cmath>

namespace qarank {
namespace {

void fill_random(Matrix& m, Rng& rng, double scale) {
  for (double& v : m.data) v = rng.uniform(-scale, scale);
}

void fill_random(Vector& v, Rng& rng, double scale) {
  for (double& x : v) x = rng.uniform(-scale, scale);
}

Vector row_vec(const Matrix& m, std::size_t r) {
  return Vector(m.row(r), m.row(r) + m.cols);
}

}  // namespace

LstmParams LstmParams::zeros(std::size_t hidden, std::size_t input) {
  LstmParams p;
  p.W_i = p.W_f = p.W_o = p.W_c = Matrix(hidden, input);
  p.U_i = p.U_f = p.U_o = p.U_c = Matrix(hidden, hidden);
  p.b_i = p.b_f = p.b_o = p.b_c = Vector(hidden, 0.0);
  return p;
}

LstmParams LstmParams::random(std::size_t hidden, std::size_t input, Rng& rng,
                              double scale) {
  LstmParams p = zeros(hidden, input);
  fill_random(p.W_i, rng, scale);
  fill_random(p.W_f, rng, scale);
  fill_random(p.W_o, rng, scale);
  fill_random(p.W_c, rng, scale);
  fill_random(p.U_i, rng, scale);
  fill_random(p.U_f, rng, scale);
  fill_random(p.U_o, rng, scale);
  fill_random(p.U_c, rng, scale);
  fill_random(p.b_i, rng, scale);
  fill_random(p.b_f, rng, scale);
  fill_random(p.b_o, rng, scale);
  fill_random(p.b_c, rng, scale);
  return p;
}

BiLstmParams BiLstmParams::random(std::size_t hidden, std::size_t input, Rng& rng,
                                  double scale) {
  BiLstmParams p;
  p.forward = LstmParams::random(hidden, input, rng, scale);
  p.backward = LstmParams::random(hidden, input, rng, scale);
  return p;
}

StepResult lstm_step(const Vector& x_t, const Vector& h_prev, const Vector& c_prev,
                     const LstmParams& p) {
  const std::size_t h = p.hidden();
  if (x_t.size() != p.input() || h_prev.size() != h || c_prev.size() != h) {
    throw Error("lstm_step: shape mismatch (E=" + std::to_string(p.input()) +
                " H=" + std::to_string(h) + ", got x=" + std::to_string(x_t.size()) +
                " h=" + std::to_string(h_prev.size()) +
                " c=" + std::to_string(c_prev.size()) + ")");
  }

  auto gate = [&](const Matrix& W, const Matrix& U, const Vector& b, Unary fn) {
    Vector z = matvec(W, x_t);
    Vector uh = matvec(U, h_prev);
    for (std::size_t k = 0; k < z.size(); ++k) z[k] += uh[k] + b[k];
    return elementwise(z, fn);
  };

  StepResult r;
  r.cache.h_prev = h_prev;
  r.cache.c_prev = c_prev;
  r.cache.i = gate(p.W_i, p.U_i, p.b_i, Unary::Sigmoid);
  r.cache.f = gate(p.W_f, p.U_f, p.b_f, Unary::Sigmoid);
  r.cache.o = gate(p.W_o, p.U_o, p.b_o, Unary::Sigmoid);
  r.cache.c_bar = gate(p.W_c, p.U_c, p.b_c, Unary::Tanh);

  r.c = Vector(h);
  for (std::size_t k = 0; k < h; ++k) {
    r.c[k] = r.cache.i[k] * r.cache.c_bar[k] + r.cache.f[k] * c_prev[k];
  }
  r.cache.c = r.c;
  r.cache.tanh_c = elementwise(r.c, Unary::Tanh);
  r.h = elementwise(r.cache.o, r.cache.tanh_c, Binary::Mul);
  r.cache.h = r.h;
  return r;
}

Matrix lstm_forward(const Matrix& xs, const Vector& mask, const LstmParams& p,
                    bool reverse, LstmCache* cache) {
  if (xs.rows != mask.size()) {
    throw Error("lstm_forward: mask length " + std::to_string(mask.size()) +
                " does not match sequence length " + std::to_string(xs.rows));
  }
  const std::size_t len = xs.rows;
  const std::size_t h = p.hidden();
  Matrix out(len, h);
  if (cache) {
    cache->reverse = reverse;
    cache->steps.clear();
  }

  Vector h_state(h, 0.0), c_state(h, 0.0);
  for (std::size_t step = 0; step < len; ++step) {
    const std::size_t pos = reverse ? len - 1 - step : step;
    if (mask[pos] == 0.0) continue;
    StepResult r = lstm_step(row_vec(xs, pos), h_state, c_state, p);
    h_state = r.h;
    c_state = r.c;
    double* orow = out.row(pos);
    for (std::size_t k = 0; k < h; ++k) orow[k] = r.h[k];
    if (cache) {
      r.cache.pos = pos;
      cache->steps.push_back(std::move(r.cache));
    }
  }
  return out;
}

EncodedSequence bilstm_encode(const Matrix& xs, const Vector& mask,
                              const BiLstmParams& p) {
  EncodedSequence seq;
  seq.mask = mask;
  const std::size_t h = p.hidden();
  Matrix fwd = lstm_forward(xs, mask, p.forward, false, &seq.fwd_cache);
  Matrix bwd = lstm_forward(xs, mask, p.backward, true, &seq.bwd_cache);
  seq.outputs = Matrix(xs.rows, 2 * h);
  for (std::size_t t = 0; t < xs.rows; ++t) {
    double* orow = seq.outputs.row(t);
    const double* frow = fwd.row(t);
    const double* brow = bwd.row(t);
    for (std::size_t k = 0; k < h; ++k) orow[k] = frow[k];
    for (std::size_t k = 0; k < h; ++k) orow[h + k] = brow[k];
  }
  return seq;
}

void lstm_backward(const Matrix& d_outputs, const Matrix& xs,
                   const LstmCache& cache, const LstmParams& p, LstmGrads& g,
                   Matrix& d_xs) {
  const std::size_t h = p.hidden();
  Vector d_h_next(h, 0.0), d_c_next(h, 0.0);

  for (std::size_t s = cache.steps.size(); s-- > 0;) {
    const LstmStepCache& st = cache.steps[s];
    const Vector x_t = row_vec(xs, st.pos);

    Vector dh(h), dc(h), d_i(h), d_f(h), d_o(h), d_cbar(h);
    const double* drow = d_outputs.row(st.pos);
    for (std::size_t k = 0; k < h; ++k) dh[k] = drow[k] + d_h_next[k];

    for (std::size_t k = 0; k < h; ++k) {
      d_o[k] = dh[k] * st.tanh_c[k];
      dc[k] = dh[k] * st.o[k] * (1.0 - st.tanh_c[k] * st.tanh_c[k]) + d_c_next[k];
      d_i[k] = dc[k] * st.c_bar[k];
      d_cbar[k] = dc[k] * st.i[k];
      d_f[k] = dc[k] * st.c_prev[k];
      d_c_next[k] = dc[k] * st.f[k];
    }

    // Pre-activation gradients.
    Vector dz_i(h), dz_f(h), dz_o(h), dz_c(h);
    for (std::size_t k = 0; k < h; ++k) {
      dz_i[k] = d_i[k] * st.i[k] * (1.0 - st.i[k]);
      dz_f[k] = d_f[k] * st.f[k] * (1.0 - st.f[k]);
      dz_o[k] = d_o[k] * st.o[k] * (1.0 - st.o[k]);
      dz_c[k] = d_cbar[k] * (1.0 - st.c_bar[k] * st.c_bar[k]);
    }

    add_outer(g.W_i, dz_i, x_t);
    add_outer(g.W_f, dz_f, x_t);
    add_outer(g.W_o, dz_o, x_t);
    add_outer(g.W_c, dz_c, x_t);
    add_outer(g.U_i, dz_i, st.h_prev);
    add_outer(g.U_f, dz_f, st.h_prev);
    add_outer(g.U_o, dz_o, st.h_prev);
    add_outer(g.U_c, dz_c, st.h_prev);
    axpy(1.0, dz_i, g.b_i);
    axpy(1.0, dz_f, g.b_f);
    axpy(1.0, dz_o, g.b_o);
    axpy(1.0, dz_c, g.b_c);

    Vector d_x = matvec_transposed(p.W_i, dz_i);
    axpy(1.0, matvec_transposed(p.W_f, dz_f), d_x);
    axpy(1.0, matvec_transposed(p.W_o, dz_o), d_x);
    axpy(1.0, matvec_transposed(p.W_c, dz_c), d_x);
    double* dxrow = d_xs.row(st.pos);
    for (std::size_t k = 0; k < d_x.size(); ++k) dxrow[k] += d_x[k];

    d_h_next = matvec_transposed(p.U_i, dz_i);
    axpy(1.0, matvec_transposed(p.U_f, dz_f), d_h_next);
    axpy(1.0, matvec_transposed(p.U_o, dz_o), d_h_next);
    axpy(1.0, matvec_transposed(p.U_c, dz_c), d_h_next);
  }
}

void bilstm_backward(const Matrix& d_outputs, const Matrix& xs,
                     const EncodedSequence& seq, const BiLstmParams& p,
                     BiLstmGrads& g, Matrix& d_xs) {
  const std::size_t h = p.hidden();
  const std::size_t len = seq.len();
  Matrix d_fwd(len, h), d_bwd(len, h);
  for (std::size_t t = 0; t < len; ++t) {
    const double* drow = d_outputs.row(t);
    double* df = d_fwd.row(t);
    double* db = d_bwd.row(t);
    for (std::size_t k = 0; k < h; ++k) df[k] = drow[k];
    for (std::size_t k = 0; k < h; ++k) db[k] = drow[h + k];
  }
  lstm_backward(d_fwd, xs, seq.fwd_cache, p.forward, g.forward, d_xs);
  lstm_backward(d_bwd, xs, seq.bwd_cache, p.backward, g.backward, d_xs);
}

}  // namespace qarank

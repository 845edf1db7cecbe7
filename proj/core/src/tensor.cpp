#include "qarank/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qarank {

std::string Matrix::shape_str() const {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) {
    throw Error("matmul: shape mismatch " + a.shape_str() + " * " + b.shape_str());
  }
  Matrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.row(i);
    double* orow = out.row(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = b.row(k);
      for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Vector matvec(const Matrix& a, const Vector& x) {
  if (a.cols != x.size()) {
    throw Error("matvec: shape mismatch " + a.shape_str() + " * " +
                std::to_string(x.size()));
  }
  Vector y(a.rows, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) acc += arow[j] * x[j];
    y[i] = acc;
  }
  return y;
}

Vector matvec_transposed(const Matrix& a, const Vector& x) {
  if (a.rows != x.size()) {
    throw Error("matvec_transposed: shape mismatch " + a.shape_str() + "^T * " +
                std::to_string(x.size()));
  }
  Vector y(a.cols, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const double* arow = a.row(i);
    for (std::size_t j = 0; j < a.cols; ++j) y[j] += xi * arow[j];
  }
  return y;
}

void add_outer(Matrix& m, const Vector& u, const Vector& v) {
  if (m.rows != u.size() || m.cols != v.size()) {
    throw Error("add_outer: shape mismatch " + m.shape_str() + " += " +
                std::to_string(u.size()) + "x" + std::to_string(v.size()));
  }
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double ui = u[i];
    if (ui == 0.0) continue;
    double* mrow = m.row(i);
    for (std::size_t j = 0; j < v.size(); ++j) mrow[j] += ui * v[j];
  }
}

double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw Error("dot: length mismatch " + std::to_string(a.size()) + " vs " +
                std::to_string(b.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm(const Vector& a) { return std::sqrt(dot(a, a)); }

void axpy(double alpha, const Vector& x, Vector& y) {
  if (x.size() != y.size()) {
    throw Error("axpy: length mismatch " + std::to_string(x.size()) + " vs " +
                std::to_string(y.size()));
  }
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

Vector elementwise(const Vector& v, Unary fn) {
  Vector out(v.size());
  switch (fn) {
    case Unary::Sigmoid:
      for (std::size_t i = 0; i < v.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-v[i]));
      break;
    case Unary::Tanh:
      for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::tanh(v[i]);
      break;
  }
  return out;
}

Vector elementwise(const Vector& a, const Vector& b, Binary fn) {
  if (a.size() != b.size()) {
    throw Error("elementwise: length mismatch " + std::to_string(a.size()) +
                " vs " + std::to_string(b.size()));
  }
  Vector out(a.size());
  switch (fn) {
    case Binary::Mul:
      for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
      break;
    case Binary::Add:
      for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
      break;
  }
  return out;
}

Vector masked_softmax(const Vector& logits, const Vector& mask) {
  if (logits.size() != mask.size()) {
    throw Error("masked_softmax: length mismatch " + std::to_string(logits.size()) +
                " vs " + std::to_string(mask.size()));
  }
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (mask[i] != 0.0) max_logit = std::max(max_logit, logits[i]);
  }
  if (max_logit == -std::numeric_limits<double>::infinity()) {
    throw Error("masked_softmax: mask has no valid positions");
  }
  Vector out(logits.size(), 0.0);
  double denom = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (mask[i] != 0.0) {
      out[i] = std::exp(logits[i] - max_logit);
      denom += out[i];
    }
  }
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] /= denom;
  return out;
}

}  // namespace qarank

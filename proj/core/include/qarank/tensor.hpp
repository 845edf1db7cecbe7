#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace qarank {

// Thrown on shape mismatches, malformed inputs and bad configuration.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double* row(std::size_t r) { return data.data() + r * cols; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }

  std::string shape_str() const;
};

enum class Unary { Sigmoid, Tanh };
enum class Binary { Mul, Add };

Matrix matmul(const Matrix& a, const Matrix& b);

// y = A x  (x.size() must equal a.cols)
Vector matvec(const Matrix& a, const Vector& x);
// y = A^T x  (x.size() must equal a.rows)
Vector matvec_transposed(const Matrix& a, const Vector& x);
// m += u v^T
void add_outer(Matrix& m, const Vector& u, const Vector& v);

double dot(const Vector& a, const Vector& b);
double norm(const Vector& a);
void axpy(double alpha, const Vector& x, Vector& y);

Vector elementwise(const Vector& v, Unary fn);
Vector elementwise(const Vector& a, const Vector& b, Binary fn);

// Softmax over positions with mask == 1; masked-out outputs are exactly 0.
// Stabilized by max subtraction. Requires at least one masked-in position.
Vector masked_softmax(const Vector& logits, const Vector& mask);

}  // namespace qarank

#pragma once

#include <string>

#include "qarank/tensor.hpp"

namespace qarank {

enum class Similarity { Cosine, Gesd };

const char* similarity_name(Similarity s);
Similarity similarity_from_name(const std::string& name);

struct MarginConfig {
  double margin = 0.2;
};

struct GesdConfig {
  double gamma = 1.0;
  double c = 1.0;
};

// a.b / (|a||b|). Errors on zero-norm operands.
double cosine(const Vector& a, const Vector& b);
void cosine_backward(const Vector& a, const Vector& b, double d_sim, Vector& d_a,
                     Vector& d_b);

// (1 / (1 + |a-b|)) * (1 / (1 + exp(-gamma (a.b + c)))).
double gesd(const Vector& a, const Vector& b, double gamma, double c);
void gesd_backward(const Vector& a, const Vector& b, double gamma, double c,
                   double d_sim, Vector& d_a, Vector& d_b);

// max{0, margin - sim_pos + sim_neg}.
double hinge_loss(double sim_pos, double sim_neg, double margin);

}  // namespace qarank

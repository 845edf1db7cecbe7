#include "qarank/scoring.hpp"

#include <cmath>

namespace qarank {

const char* similarity_name(Similarity s) {
  return s == Similarity::Cosine ? "cosine" : "gesd";
}

Similarity similarity_from_name(const std::string& name) {
  if (name == "cosine") return Similarity::Cosine;
  if (name == "gesd") return Similarity::Gesd;
  throw Error("unknown similarity: \"" + name + "\"");
}

double cosine(const Vector& a, const Vector& b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) throw Error("cosine: zero-norm operand");
  return dot(a, b) / (na * nb);
}

void cosine_backward(const Vector& a, const Vector& b, double d_sim, Vector& d_a,
                     Vector& d_b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) throw Error("cosine_backward: zero-norm operand");
  const double inv = 1.0 / (na * nb);
  const double sim = dot(a, b) * inv;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d_a[i] += d_sim * (b[i] * inv - sim * a[i] / (na * na));
    d_b[i] += d_sim * (a[i] * inv - sim * b[i] / (nb * nb));
  }
}

double gesd(const Vector& a, const Vector& b, double gamma, double c) {
  Vector diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  const double dist = norm(diff);
  const double euclid = 1.0 / (1.0 + dist);
  const double sig = 1.0 / (1.0 + std::exp(-gamma * (dot(a, b) + c)));
  return euclid * sig;
}

void gesd_backward(const Vector& a, const Vector& b, double gamma, double c,
                   double d_sim, Vector& d_a, Vector& d_b) {
  Vector diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  const double dist = norm(diff);
  const double euclid = 1.0 / (1.0 + dist);
  const double sig = 1.0 / (1.0 + std::exp(-gamma * (dot(a, b) + c)));

  // d euclid / d dist = -euclid^2; d dist / d a = (a-b)/dist (subgradient 0 at 0).
  const double d_dist = dist > 0.0 ? d_sim * sig * (-euclid * euclid) / dist : 0.0;
  const double d_dot = d_sim * euclid * sig * (1.0 - sig) * gamma;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d_a[i] += d_dist * diff[i] + d_dot * b[i];
    d_b[i] += -d_dist * diff[i] + d_dot * a[i];
  }
}

double hinge_loss(double sim_pos, double sim_neg, double margin) {
  const double l = margin - sim_pos + sim_neg;
  return l > 0.0 ? l : 0.0;
}

}  // namespace qarank

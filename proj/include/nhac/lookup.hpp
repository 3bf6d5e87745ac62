#pragma once

#include "nhac/common.hpp"

namespace nhac {

// Max-subtracted softmax over a logit vector.
Vector stable_softmax(const Vector& logits);

/// Non-parametric classifier: one unit-norm centroid column per cluster,
/// scored against a feature by temperature-scaled inner products.
class LookupTable {
 public:
  // columns is embed_dim x C; every column is unit-normalized on entry.
  LookupTable(Matrix columns, double tau);

  int dim() const { return static_cast<int>(columns_.rows()); }
  int cluster_count() const { return static_cast<int>(columns_.cols()); }
  double tau() const { return tau_; }
  const Matrix& columns() const { return columns_; }

  // p_c = exp(V_c . v / tau) / sum_j exp(V_j . v / tau)
  Vector probabilities(const Vector& v) const;

  struct IdLossResult {
    double loss = 0.0;
    Vector grad_v;  // (1/tau) V (p - onehot(label))
  };
  // Negative log probability of the labeled cluster. Labels are 1-based.
  IdLossResult id_loss(const Vector& v, int label) const;

  // Moves the labeled column to the renormalized midpoint of itself and a
  // unit-norm feature. An exactly antipodal feature would zero the midpoint;
  // the column is kept unchanged instead, with a warning.
  void update(int label, const Vector& unit_v);

 private:
  Vector logits(const Vector& v) const;

  Matrix columns_;
  double tau_;
};

}  // namespace nhac

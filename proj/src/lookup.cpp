#include "nhac/lookup.hpp"

#include <cmath>

namespace nhac {

Vector stable_softmax(const Vector& logits) {
  if (logits.size() == 0) {
    throw InvalidInput("softmax of an empty logit vector");
  }
  const double m = logits.maxCoeff();
  Vector p = (logits.array() - m).exp().matrix();
  return p / p.sum();
}

LookupTable::LookupTable(Matrix columns, double tau)
    : columns_(std::move(columns)), tau_(tau) {
  if (columns_.rows() == 0 || columns_.cols() == 0) {
    throw InvalidInput("lookup table needs at least one column and one row");
  }
  if (!(tau_ > 0.0)) {
    throw InvalidInput("lookup table temperature must be positive");
  }
  for (Eigen::Index c = 0; c < columns_.cols(); ++c) {
    columns_.col(c) = normalize_or_basis(columns_.col(c));
  }
}

Vector LookupTable::logits(const Vector& v) const {
  if (v.size() != columns_.rows()) {
    throw InvalidInput("lookup table: feature has dimension " +
                       std::to_string(v.size()) + ", expected " +
                       std::to_string(columns_.rows()));
  }
  return columns_.transpose() * v / tau_;
}

Vector LookupTable::probabilities(const Vector& v) const {
  return stable_softmax(logits(v));
}

LookupTable::IdLossResult LookupTable::id_loss(const Vector& v,
                                               int label) const {
  if (label < 1 || label > cluster_count()) {
    throw InvalidInput("id_loss: label " + std::to_string(label) +
                       " outside 1.." + std::to_string(cluster_count()));
  }
  const Vector l = logits(v);
  const double m = l.maxCoeff();
  const Vector shifted_exp = (l.array() - m).exp().matrix();
  const double total = shifted_exp.sum();
  IdLossResult r;
  // -log p_y, evaluated as log-sum-exp so extreme logits cannot underflow.
  r.loss = std::log(total) - (l[label - 1] - m);
  Vector p = shifted_exp / total;
  p[label - 1] -= 1.0;
  r.grad_v = columns_ * p / tau_;
  return r;
}

void LookupTable::update(int label, const Vector& unit_v) {
  if (label < 1 || label > cluster_count()) {
    throw InvalidInput("lookup update: label out of range");
  }
  if (unit_v.size() != columns_.rows()) {
    throw InvalidInput("lookup update: feature dimension mismatch");
  }
  if (std::abs(unit_v.norm() - 1.0) > 1e-6) {
    throw InvalidInput("lookup update expects a unit-norm feature");
  }
  const Vector midpoint = 0.5 * (columns_.col(label - 1) + unit_v);
  const double n = midpoint.norm();
  if (n == 0.0) {
    warn("lookup update hit an exactly antipodal feature; keeping the previous column");
    return;
  }
  columns_.col(label - 1) = midpoint / n;
}

}  // namespace nhac

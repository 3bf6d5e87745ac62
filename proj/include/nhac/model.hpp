#pragma once

#include <string>
#include <vector>

#include "nhac/common.hpp"

namespace nhac {

struct EmbeddingModel;

/// Per-parameter tensors matching an EmbeddingModel's shapes. Used both for
/// accumulated gradients and for optimizer velocity.
struct ParameterGradients {
  Matrix w1, w2;
  Vector b1, b2;

  static ParameterGradients zeros_like(const EmbeddingModel& model);
  void set_zero();
};

/// Two affine layers with a rectifier in between, optional inverted dropout
/// on the hidden activations, and a final L2 normalization, so every
/// embedding lands on the unit sphere.
struct EmbeddingModel {
  int input_dim = 0;
  int hidden_dim = 0;
  int embed_dim = 0;
  double dropout_rate = 0.0;
  Matrix w1, w2;
  Vector b1, b2;

  // He-scaled gaussian weights, zero biases.
  static EmbeddingModel random_init(int input, int hidden, int embed,
                                    double dropout, Rng& rng);

  struct Forward {
    Vector input;
    Vector pre_hidden;   // w1 * x + b1
    Vector hidden;       // rectified (and dropout-scaled in train mode)
    Vector raw;          // w2 * hidden + b2
    Vector out;          // raw normalized to unit length
    Vector drop_scale;   // per-unit keep scale, only set when dropped
    double raw_norm = 0.0;
    bool dropped = false;
    bool degenerate = false;  // raw was exactly zero; out is the basis fallback
  };

  // Dropout masks are drawn from rng only in train mode and only when the
  // dropout rate is positive; otherwise the forward pass is a pure function
  // of (weights, frame).
  Forward forward(const Vector& frame, bool train_mode, Rng* rng) const;
  Vector embed(const Vector& frame, bool train_mode = false,
               Rng* rng = nullptr) const;

  // Accumulates dLoss/dParams into grads given dLoss/dOut for one frame.
  void backward(const Forward& f, const Vector& grad_out,
                ParameterGradients& grads) const;

  bool same_shape(const EmbeddingModel& other) const;
};

/// Average pooling of per-frame embeddings into one tracklet feature. The
/// mean is deliberately not re-normalized.
Vector tracklet_feature(const std::vector<Vector>& embeddings);

struct TripletLossResult {
  double loss = 0.0;
  Vector grad_anchor, grad_positive, grad_negative;
};

// Hinge on Euclidean distances: max(0, margin + d(a,p) - d(a,n)). The
// subgradient at the hinge point and at zero distances is 0.
TripletLossResult triplet_loss(const Vector& anchor, const Vector& positive,
                               const Vector& negative, double margin);

/// Momentum SGD with a one-step learning-rate drop after a fixed epoch.
class SgdOptimizer {
 public:
  SgdOptimizer(const EmbeddingModel& model, double learning_rate,
               double momentum, int drop_epoch, double reduced_rate);

  // Epochs are 1-based; epochs after drop_epoch use the reduced rate.
  double rate_for_epoch(int epoch) const;
  void step(EmbeddingModel& model, const ParameterGradients& grads, int epoch);
  const ParameterGradients& velocity() const { return velocity_; }

 private:
  double learning_rate_;
  double momentum_;
  int drop_epoch_;
  double reduced_rate_;
  ParameterGradients velocity_;
};

// Versioned text format: header line, then the four parameter arrays
// (w1, b1, w2, b2) in column-major order. Round-trips bitwise.
void save_model(const EmbeddingModel& model, const std::string& path);
EmbeddingModel load_model(const std::string& path);

}  // namespace nhac

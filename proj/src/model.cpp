#include "nhac/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace nhac {

ParameterGradients ParameterGradients::zeros_like(const EmbeddingModel& model) {
  ParameterGradients g;
  g.w1 = Matrix::Zero(model.hidden_dim, model.input_dim);
  g.b1 = Vector::Zero(model.hidden_dim);
  g.w2 = Matrix::Zero(model.embed_dim, model.hidden_dim);
  g.b2 = Vector::Zero(model.embed_dim);
  return g;
}

void ParameterGradients::set_zero() {
  w1.setZero();
  b1.setZero();
  w2.setZero();
  b2.setZero();
}

EmbeddingModel EmbeddingModel::random_init(int input, int hidden, int embed,
                                           double dropout, Rng& rng) {
  if (input <= 0 || hidden <= 0 || embed <= 0) {
    throw InvalidInput("embedding model dimensions must be positive");
  }
  if (dropout < 0.0 || dropout >= 1.0) {
    throw InvalidInput("dropout rate must lie in [0, 1)");
  }
  EmbeddingModel m;
  m.input_dim = input;
  m.hidden_dim = hidden;
  m.embed_dim = embed;
  m.dropout_rate = dropout;
  m.w1 = Matrix(hidden, input);
  m.b1 = Vector::Zero(hidden);
  m.w2 = Matrix(embed, hidden);
  m.b2 = Vector::Zero(embed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double s1 = std::sqrt(2.0 / static_cast<double>(input));
  for (Eigen::Index i = 0; i < m.w1.size(); ++i) {
    m.w1.data()[i] = s1 * gauss(rng);
  }
  const double s2 = std::sqrt(2.0 / static_cast<double>(hidden));
  for (Eigen::Index i = 0; i < m.w2.size(); ++i) {
    m.w2.data()[i] = s2 * gauss(rng);
  }
  return m;
}

EmbeddingModel::Forward EmbeddingModel::forward(const Vector& frame,
                                                bool train_mode,
                                                Rng* rng) const {
  if (frame.size() != input_dim) {
    throw InvalidInput("embed: frame has dimension " +
                       std::to_string(frame.size()) + ", expected " +
                       std::to_string(input_dim));
  }
  Forward f;
  f.input = frame;
  f.pre_hidden = w1 * frame + b1;
  Vector act = f.pre_hidden.cwiseMax(0.0);
  if (train_mode && dropout_rate > 0.0) {
    if (rng == nullptr) {
      throw InvalidInput("embed: train mode with dropout needs an rng");
    }
    f.dropped = true;
    f.drop_scale = Vector::Zero(hidden_dim);
    std::bernoulli_distribution keep(1.0 - dropout_rate);
    const double scale = 1.0 / (1.0 - dropout_rate);
    for (int i = 0; i < hidden_dim; ++i) {
      f.drop_scale[i] = keep(*rng) ? scale : 0.0;
    }
    act = act.cwiseProduct(f.drop_scale);
  }
  f.hidden = std::move(act);
  f.raw = w2 * f.hidden + b2;
  f.raw_norm = f.raw.norm();
  if (f.raw_norm == 0.0) {
    f.degenerate = true;
    warn("embedding collapsed to the zero vector; substituting the first basis vector");
    f.out = Vector::Zero(embed_dim);
    f.out[0] = 1.0;
  } else {
    f.out = f.raw / f.raw_norm;
  }
  return f;
}

Vector EmbeddingModel::embed(const Vector& frame, bool train_mode,
                             Rng* rng) const {
  return forward(frame, train_mode, rng).out;
}

void EmbeddingModel::backward(const Forward& f, const Vector& grad_out,
                              ParameterGradients& grads) const {
  if (grad_out.size() != embed_dim) {
    throw InvalidInput("backward: gradient dimension mismatch");
  }
  if (f.degenerate) {
    return;  // the basis fallback has no usable direction derivative
  }
  // Through the normalization: (I - out out^T) / ||raw||.
  Vector grad_raw = (grad_out - f.out * f.out.dot(grad_out)) / f.raw_norm;
  grads.w2.noalias() += grad_raw * f.hidden.transpose();
  grads.b2 += grad_raw;
  Vector grad_hidden = w2.transpose() * grad_raw;
  if (f.dropped) {
    grad_hidden = grad_hidden.cwiseProduct(f.drop_scale);
  }
  for (int i = 0; i < hidden_dim; ++i) {
    if (f.pre_hidden[i] <= 0.0) {
      grad_hidden[i] = 0.0;
    }
  }
  grads.w1.noalias() += grad_hidden * f.input.transpose();
  grads.b1 += grad_hidden;
}

bool EmbeddingModel::same_shape(const EmbeddingModel& other) const {
  return input_dim == other.input_dim && hidden_dim == other.hidden_dim &&
         embed_dim == other.embed_dim;
}

Vector tracklet_feature(const std::vector<Vector>& embeddings) {
  return mean_vector(embeddings);
}

TripletLossResult triplet_loss(const Vector& anchor, const Vector& positive,
                               const Vector& negative, double margin) {
  if (anchor.size() != positive.size() || anchor.size() != negative.size()) {
    throw InvalidInput("triplet_loss: dimension mismatch");
  }
  if (margin < 0.0) {
    throw InvalidInput("triplet_loss: margin must be non-negative");
  }
  const double dp = euclidean_distance(anchor, positive);
  const double dn = euclidean_distance(anchor, negative);
  TripletLossResult r;
  r.loss = std::max(0.0, margin + dp - dn);
  r.grad_anchor = Vector::Zero(anchor.size());
  r.grad_positive = Vector::Zero(anchor.size());
  r.grad_negative = Vector::Zero(anchor.size());
  if (r.loss > 0.0) {
    if (dp > 0.0) {
      const Vector u = (anchor - positive) / dp;
      r.grad_anchor += u;
      r.grad_positive = -u;
    }
    if (dn > 0.0) {
      const Vector u = (anchor - negative) / dn;
      r.grad_anchor -= u;
      r.grad_negative = u;
    }
  }
  return r;
}

SgdOptimizer::SgdOptimizer(const EmbeddingModel& model, double learning_rate,
                           double momentum, int drop_epoch,
                           double reduced_rate)
    : learning_rate_(learning_rate),
      momentum_(momentum),
      drop_epoch_(drop_epoch),
      reduced_rate_(reduced_rate),
      velocity_(ParameterGradients::zeros_like(model)) {
  if (learning_rate < 0.0 || reduced_rate < 0.0) {
    throw InvalidInput("learning rates must be non-negative");
  }
  if (momentum < 0.0 || momentum >= 1.0) {
    throw InvalidInput("momentum must lie in [0, 1)");
  }
}

double SgdOptimizer::rate_for_epoch(int epoch) const {
  return epoch <= drop_epoch_ ? learning_rate_ : reduced_rate_;
}

void SgdOptimizer::step(EmbeddingModel& model,
                        const ParameterGradients& grads, int epoch) {
  if (velocity_.w1.rows() != grads.w1.rows() ||
      velocity_.w1.cols() != grads.w1.cols() ||
      velocity_.w2.rows() != grads.w2.rows() ||
      velocity_.w2.cols() != grads.w2.cols()) {
    throw InvalidInput("optimizer state does not match gradient shapes");
  }
  const double lr = rate_for_epoch(epoch);
  velocity_.w1 = momentum_ * velocity_.w1 + grads.w1;
  velocity_.b1 = momentum_ * velocity_.b1 + grads.b1;
  velocity_.w2 = momentum_ * velocity_.w2 + grads.w2;
  velocity_.b2 = momentum_ * velocity_.b2 + grads.b2;
  model.w1 -= lr * velocity_.w1;
  model.b1 -= lr * velocity_.b1;
  model.w2 -= lr * velocity_.w2;
  model.b2 -= lr * velocity_.b2;
}

namespace {

void write_array(std::ostream& out, const char* name, const double* data,
                 Eigen::Index count) {
  out << name << ' ' << count << '\n';
  for (Eigen::Index i = 0; i < count; ++i) {
    if (i > 0) {
      out << ' ';
    }
    out << format_double(data[i]);
  }
  out << '\n';
}

void read_array(std::istream& in, const std::string& expected_name,
                double* data, Eigen::Index count) {
  std::string name;
  Eigen::Index stored = 0;
  if (!(in >> name >> stored) || name != expected_name || stored != count) {
    throw InvalidInput("model file: bad or missing '" + expected_name +
                       "' block");
  }
  std::string token;
  for (Eigen::Index i = 0; i < count; ++i) {
    if (!(in >> token)) {
      throw InvalidInput("model file: truncated '" + expected_name + "' block");
    }
    data[i] = parse_double(token);
  }
}

}  // namespace

void save_model(const EmbeddingModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw InvalidInput("cannot open model file for writing: " + path);
  }
  out << "#nhac-model v1 input_dim=" << model.input_dim
      << " hidden_dim=" << model.hidden_dim << " embed_dim=" << model.embed_dim
      << " dropout=" << format_double(model.dropout_rate) << '\n';
  write_array(out, "w1", model.w1.data(), model.w1.size());
  write_array(out, "b1", model.b1.data(), model.b1.size());
  write_array(out, "w2", model.w2.data(), model.w2.size());
  write_array(out, "b2", model.b2.data(), model.b2.size());
  if (!out) {
    throw InvalidInput("failed while writing model file: " + path);
  }
}

EmbeddingModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InvalidInput("cannot open model file: " + path);
  }
  std::string header;
  std::getline(in, header);
  int input = 0, hidden = 0, embed = 0;
  double dropout = 0.0;
  char dropout_buf[64] = {0};
  if (std::sscanf(header.c_str(),
                  "#nhac-model v1 input_dim=%d hidden_dim=%d embed_dim=%d "
                  "dropout=%63s",
                  &input, &hidden, &embed, dropout_buf) != 4) {
    throw InvalidInput("model file: unrecognized header '" + header + "'");
  }
  dropout = parse_double(dropout_buf);
  if (input <= 0 || hidden <= 0 || embed <= 0) {
    throw InvalidInput("model file: non-positive dimensions in header");
  }
  EmbeddingModel m;
  m.input_dim = input;
  m.hidden_dim = hidden;
  m.embed_dim = embed;
  m.dropout_rate = dropout;
  m.w1 = Matrix(hidden, input);
  m.b1 = Vector(hidden);
  m.w2 = Matrix(embed, hidden);
  m.b2 = Vector(embed);
  read_array(in, "w1", m.w1.data(), m.w1.size());
  read_array(in, "b1", m.b1.data(), m.b1.size());
  read_array(in, "w2", m.w2.data(), m.w2.size());
  read_array(in, "b2", m.b2.data(), m.b2.size());
  return m;
}

}  // namespace nhac

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nhac/model.hpp"
#include "test_support.hpp"

#include <cstdio>
#include <filesystem>

using namespace nhac;
using testsupport::WarningCapture;

namespace {

EmbeddingModel small_model(Rng& rng, double dropout = 0.0) {
  return EmbeddingModel::random_init(5, 7, 4, dropout, rng);
}

}  // namespace

TEST_CASE("embed output is always unit norm") {
  Rng rng(1);
  const EmbeddingModel model = small_model(rng);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    Vector x(5);
    for (int j = 0; j < 5; ++j) x[j] = gauss(rng);
    CHECK(model.embed(x).norm() == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("embed with all-zero parameters falls back to the basis vector") {
  Rng rng(2);
  EmbeddingModel model = small_model(rng);
  model.w1.setZero();
  model.b1.setZero();
  model.w2.setZero();
  model.b2.setZero();
  WarningCapture warnings;
  const Vector out = model.embed(Vector::Ones(5));
  CHECK(out[0] == 1.0);
  CHECK(out.tail(3).norm() == 0.0);
  CHECK(warnings.any_contains("zero vector"));
}

TEST_CASE("embed rejects frames of the wrong dimension") {
  Rng rng(3);
  const EmbeddingModel model = small_model(rng);
  CHECK_THROWS_AS(model.embed(Vector::Ones(6)), InvalidInput);
}

TEST_CASE("embed in train mode replays identically from the same rng state") {
  Rng init(4);
  const EmbeddingModel model = small_model(init, 0.5);
  const Vector x = Vector::Ones(5);
  Rng a(99);
  Rng b(99);
  const Vector ea = model.embed(x, true, &a);
  const Vector eb = model.embed(x, true, &b);
  CHECK(ea == eb);
  // Without an rng, train mode with dropout is an error.
  CHECK_THROWS_AS(model.embed(x, true, nullptr), InvalidInput);
}

TEST_CASE("dropout-free embed is a pure function") {
  Rng init(5);
  const EmbeddingModel model = small_model(init, 0.0);
  const Vector x = Vector::Random(5);
  Rng r(1);
  CHECK(model.embed(x, true, &r) == model.embed(x));
}

TEST_CASE("tracklet_feature is the plain mean") {
  Vector e1 = Vector::Zero(2);
  e1[0] = 1.0;
  Vector e2 = Vector::Zero(2);
  e2[1] = 1.0;
  CHECK(tracklet_feature({e1}) == e1);
  const Vector mid = tracklet_feature({e1, e2});
  CHECK(mid[0] == doctest::Approx(0.5));
  CHECK(mid[1] == doctest::Approx(0.5));
  CHECK_THROWS_AS(tracklet_feature({}), InvalidInput);

  // 16 random unit vectors against the serial summation reference.
  Rng rng(6);
  std::vector<Vector> vs;
  std::vector<std::vector<double>> raw;
  for (int i = 0; i < 16; ++i) {
    raw.push_back(testsupport::random_unit(rng, 8));
    vs.push_back(testsupport::to_eigen(raw.back()));
  }
  const Vector got = tracklet_feature(vs);
  const std::vector<double> expect = testsupport::oracle::mean(raw);
  for (int i = 0; i < 8; ++i) {
    CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-12));
  }
}

TEST_CASE("triplet loss hinge cases") {
  Vector a = Vector::Zero(2);
  Vector p = Vector::Zero(2);
  Vector n = Vector::Zero(2);
  p[0] = 0.5;
  n[0] = 0.6;
  SUBCASE("equal distances give the margin") {
    Vector n2 = Vector::Zero(2);
    n2[1] = 0.5;
    CHECK(triplet_loss(a, p, n2, 0.3).loss == doctest::Approx(0.3));
  }
  SUBCASE("satisfied margin gives zero with zero gradients") {
    const TripletLossResult r = triplet_loss(a, p, n, 0.05);
    CHECK(r.loss == 0.0);
    CHECK(r.grad_anchor.norm() == 0.0);
    CHECK(r.grad_positive.norm() == 0.0);
    CHECK(r.grad_negative.norm() == 0.0);
  }
  SUBCASE("active hinge evaluates the scalar formula") {
    CHECK(triplet_loss(a, p, n, 0.3).loss == doctest::Approx(0.2));
  }
}

TEST_CASE("triplet loss gradients match central differences") {
  Rng rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double h = 1e-6;
  int checked = 0;
  while (checked < 5) {
    Vector a(4), p(4), n(4);
    for (int i = 0; i < 4; ++i) {
      a[i] = gauss(rng);
      p[i] = gauss(rng);
      n[i] = gauss(rng);
    }
    const double dp = euclidean_distance(a, p);
    const double dn = euclidean_distance(a, n);
    // stay away from the hinge kink and zero distances
    if (std::abs(0.3 + dp - dn) < 1e-2 || dp < 1e-2 || dn < 1e-2) continue;
    ++checked;
    const TripletLossResult r = triplet_loss(a, p, n, 0.3);
    for (int i = 0; i < 4; ++i) {
      for (Vector* v : {&a, &p, &n}) {
        const double saved = (*v)[i];
        (*v)[i] = saved + h;
        const double up = triplet_loss(a, p, n, 0.3).loss;
        (*v)[i] = saved - h;
        const double down = triplet_loss(a, p, n, 0.3).loss;
        (*v)[i] = saved;
        const double fd = (up - down) / (2 * h);
        const double analytic = v == &a   ? r.grad_anchor[i]
                                : v == &p ? r.grad_positive[i]
                                          : r.grad_negative[i];
        CHECK(analytic == doctest::Approx(fd).epsilon(1e-5));
      }
    }
  }
}

TEST_CASE("backward matches finite differences through the network") {
  Rng rng(8);
  const EmbeddingModel model = small_model(rng);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector x(5), upstream(4);
  for (int i = 0; i < 5; ++i) x[i] = gauss(rng);
  for (int i = 0; i < 4; ++i) upstream[i] = gauss(rng);
  // loss = upstream . embed(x)
  ParameterGradients grads = ParameterGradients::zeros_like(model);
  model.backward(model.forward(x, false, nullptr), upstream, grads);
  const double h = 1e-6;
  EmbeddingModel probe = model;
  const auto loss = [&]() { return upstream.dot(probe.embed(x)); };
  const auto check_block = [&](Matrix& param, const Matrix& grad) {
    for (Eigen::Index i = 0; i < param.size(); ++i) {
      const double saved = param.data()[i];
      param.data()[i] = saved + h;
      const double up = loss();
      param.data()[i] = saved - h;
      const double down = loss();
      param.data()[i] = saved;
      const double fd = (up - down) / (2 * h);
      CHECK(grad.data()[i] ==
            doctest::Approx(fd).epsilon(1e-4).scale(1.0));
    }
  };
  check_block(probe.w1, grads.w1);
  check_block(probe.w2, grads.w2);
  for (Eigen::Index i = 0; i < probe.b1.size(); ++i) {
    const double saved = probe.b1[i];
    probe.b1[i] = saved + h;
    const double up = loss();
    probe.b1[i] = saved - h;
    const double down = loss();
    probe.b1[i] = saved;
    CHECK(grads.b1[i] == doctest::Approx((up - down) / (2 * h)).epsilon(1e-4));
  }
  for (Eigen::Index i = 0; i < probe.b2.size(); ++i) {
    const double saved = probe.b2[i];
    probe.b2[i] = saved + h;
    const double up = loss();
    probe.b2[i] = saved - h;
    const double down = loss();
    probe.b2[i] = saved;
    CHECK(grads.b2[i] == doctest::Approx((up - down) / (2 * h)).epsilon(1e-4));
  }
}

TEST_CASE("sgd learning-rate schedule and zero-rate behavior") {
  Rng rng(9);
  EmbeddingModel model = small_model(rng);
  SUBCASE("default-style schedule drops after the threshold epoch") {
    SgdOptimizer opt(model, 0.1, 0.9, 15, 0.01);
    CHECK(opt.rate_for_epoch(1) == 0.1);
    CHECK(opt.rate_for_epoch(15) == 0.1);
    CHECK(opt.rate_for_epoch(16) == 0.01);
  }
  SUBCASE("zero learning rate leaves parameters untouched") {
    SgdOptimizer opt(model, 0.0, 0.9, 15, 0.0);
    const EmbeddingModel before = model;
    ParameterGradients grads = ParameterGradients::zeros_like(model);
    grads.w1.setOnes();
    grads.b2.setConstant(3.0);
    opt.step(model, grads, 1);
    CHECK(model.w1 == before.w1);
    CHECK(model.b2 == before.b2);
  }
  SUBCASE("momentum accumulates velocity") {
    SgdOptimizer opt(model, 0.5, 0.5, 100, 0.5);
    ParameterGradients grads = ParameterGradients::zeros_like(model);
    grads.b1.setConstant(1.0);
    const Vector b1_start = model.b1;
    opt.step(model, grads, 1);  // velocity 1, step 0.5
    opt.step(model, grads, 1);  // velocity 1.5, step 0.75
    CHECK(model.b1[0] == doctest::Approx(b1_start[0] - 1.25));
  }
}

TEST_CASE("model state save/load round-trips bitwise") {
  Rng rng(10);
  const EmbeddingModel model = small_model(rng, 0.5);
  const std::filesystem::path path =
      std::filesystem::temp_directory_path() / "nhac_model_roundtrip.txt";
  save_model(model, path.string());
  const EmbeddingModel loaded = load_model(path.string());
  CHECK(loaded.input_dim == model.input_dim);
  CHECK(loaded.hidden_dim == model.hidden_dim);
  CHECK(loaded.embed_dim == model.embed_dim);
  CHECK(loaded.dropout_rate == model.dropout_rate);
  CHECK(loaded.w1 == model.w1);
  CHECK(loaded.b1 == model.b1);
  CHECK(loaded.w2 == model.w2);
  CHECK(loaded.b2 == model.b2);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_model("/nonexistent/nhac-model.txt"), InvalidInput);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <Eigen/QR>

#include "nhac/graph_trim.hpp"
#include "test_support.hpp"

using namespace nhac;
using testsupport::WarningCapture;
namespace oracle = testsupport::oracle;

namespace {

std::vector<Vector> random_graph(Rng& rng, int count, int dim) {
  std::vector<Vector> nodes;
  nodes.reserve(count);
  for (int i = 0; i < count; ++i) {
    nodes.push_back(testsupport::to_eigen(testsupport::random_unit(rng, dim)));
  }
  return nodes;
}

std::vector<std::vector<double>> to_raw(const std::vector<Vector>& nodes) {
  std::vector<std::vector<double>> raw;
  raw.reserve(nodes.size());
  for (const Vector& v : nodes) {
    raw.push_back(testsupport::to_std(v));
  }
  return raw;
}

}  // namespace

TEST_CASE("single-node graph is its own centroid with similarity one") {
  Vector e1 = Vector::Zero(3);
  e1[0] = 1.0;
  const TrackletGraph g = build_graph({e1});
  CHECK(g.centroid == e1);
  CHECK(g.similarities.size() == 1);
  CHECK(g.similarities[0] == doctest::Approx(1.0));
}

TEST_CASE("antipodal nodes hit the zero-centroid rule") {
  Vector e1 = Vector::Zero(2);
  e1[0] = 1.0;
  WarningCapture warnings;
  const TrackletGraph g = build_graph({e1, -e1});
  CHECK(g.centroid.norm() == 0.0);
  CHECK(g.similarities[0] == 0.0);
  CHECK(g.similarities[1] == 0.0);
  CHECK(warnings.any_contains("zero vector"));
}

TEST_CASE("similarities match the scalar cosine reference") {
  Rng rng(31);
  const std::vector<Vector> nodes = random_graph(rng, 4, 6);
  const TrackletGraph g = build_graph(nodes);
  const oracle::TrimReference ref = oracle::trim_reference(to_raw(nodes), 0.5);
  for (int j = 0; j < 4; ++j) {
    CHECK(g.similarities[j] ==
          doctest::Approx(ref.similarities[j]).epsilon(1e-12));
  }
  CHECK_THROWS_AS(build_graph({}), InvalidInput);
}

TEST_CASE("dynamic threshold follows the scaled-mean formula") {
  CHECK(dynamic_threshold({0.0, 0.0, 0.0}, 0.5) == 0.0);
  CHECK(dynamic_threshold({0.0, 0.0, 0.0, 0.8}, 0.5) == doctest::Approx(0.4));
  CHECK_THROWS_AS(dynamic_threshold({0.1}, 0.0), ConfigError);
  CHECK_THROWS_AS(dynamic_threshold({0.1}, -0.5), ConfigError);
  CHECK_THROWS_AS(dynamic_threshold({}, 0.5), InvalidInput);
}

TEST_CASE("identical nodes all survive and keep the centroid bitwise") {
  Vector v = Vector::Ones(4).normalized();
  TrackletGraph g = build_graph({v, v, v});
  trim(g, 0.5);
  CHECK(g.threshold == 0.0);
  CHECK(std::count(g.survivor_mask.begin(), g.survivor_mask.end(), true) == 3);
  CHECK(g.trimmed_feature == g.centroid);
}

TEST_CASE("a constructed deviation pattern trims exactly the heavy node") {
  // similarities chosen so deviations come out as [0, 0, 0, 0.8]
  TrackletGraph g;
  Vector proto = Vector::Zero(2);
  proto[0] = 1.0;
  Vector tail = Vector::Zero(2);
  tail[1] = 1.0;
  g.node_features = {proto, proto, proto, tail};
  g.centroid = mean_vector(g.node_features);
  g.similarities = {1.0, 1.0, 1.0, 1.0 - std::sqrt(0.8)};
  trim(g, 0.5);
  CHECK(g.deviations[3] == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(g.threshold == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(g.survivor_mask == std::vector<bool>{true, true, true, false});
  CHECK(g.trimmed_feature == mean_vector({proto, proto, proto}));
}

TEST_CASE("an outlier at cosine -0.5 from the centroid is trimmed at delta 0.5") {
  // Three nodes on e1 plus one at the angle that lands cos(node, centroid)
  // at -0.5 (cos(theta) = (-3 + sqrt(33)) / 12 with the sign flipped).
  const double t = (-3.0 - std::sqrt(33.0)) / 12.0;
  Vector e1 = Vector::Zero(2);
  e1[0] = 1.0;
  Vector outlier(2);
  outlier << t, std::sqrt(1.0 - t * t);
  std::vector<Vector> nodes = {e1, e1, e1, outlier};
  TrackletGraph g = build_graph(nodes);
  CHECK(g.similarities[3] == doctest::Approx(-0.5).epsilon(1e-9));
  trim(g, 0.5);
  const oracle::TrimReference ref = oracle::trim_reference(to_raw(nodes), 0.5);
  CHECK(g.survivor_mask == ref.survivors);
  CHECK(g.survivor_mask == std::vector<bool>{true, true, true, false});
}

TEST_CASE("rotating every node leaves the trim outcome unchanged") {
  Rng rng(32);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int dim = 5;
    const int count = 2 + static_cast<int>(rng() % 10);
    std::vector<Vector> nodes = random_graph(rng, count, dim);
    Matrix m(dim, dim);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = gauss(rng);
    const Matrix q = Eigen::HouseholderQR<Matrix>(m).householderQ();
    std::vector<Vector> rotated;
    rotated.reserve(count);
    for (const Vector& v : nodes) rotated.push_back(q * v);

    TrackletGraph a = build_graph(nodes);
    TrackletGraph b = build_graph(rotated);
    trim(a, 0.5);
    trim(b, 0.5);
    CHECK(a.survivor_mask == b.survivor_mask);
    CHECK(a.threshold == doctest::Approx(b.threshold).epsilon(1e-9));
    for (int j = 0; j < count; ++j) {
      CHECK(a.similarities[j] ==
            doctest::Approx(b.similarities[j]).epsilon(1e-9));
      CHECK(a.deviations[j] ==
            doctest::Approx(b.deviations[j]).epsilon(1e-9));
    }
  }
}

TEST_CASE("survivors are never empty for delta in (0, 1]") {
  Rng rng(33);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const int count = 1 + static_cast<int>(rng() % 16);
    const int dim = 2 + static_cast<int>(rng() % 6);
    TrackletGraph g = build_graph(random_graph(rng, count, dim));
    const double delta = std::max(1e-9, unit(rng));
    trim(g, delta);
    CHECK(std::count(g.survivor_mask.begin(), g.survivor_mask.end(), true) > 0);
  }
}

TEST_CASE("larger delta trims a superset of nodes") {
  Rng rng(34);
  for (int trial = 0; trial < 50; ++trial) {
    const int count = 2 + static_cast<int>(rng() % 16);
    const std::vector<Vector> nodes = random_graph(rng, count, 4);
    TrackletGraph low = build_graph(nodes);
    TrackletGraph high = build_graph(nodes);
    trim(low, 0.3);
    trim(high, 0.8);
    for (int j = 0; j < count; ++j) {
      if (!low.survivor_mask[j]) {
        CHECK(!high.survivor_mask[j]);
      }
    }
  }
}

TEST_CASE("survivor sets match the scalar reference across random graphs") {
  Rng rng(35);
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const int count = 1 + static_cast<int>(rng() % 32);
    const int dim = trial % 2 == 0 ? 4 : 16;
    const std::vector<Vector> nodes = random_graph(rng, count, dim);
    const double delta = unit(rng);
    TrackletGraph g = build_graph(nodes);
    trim(g, delta);
    const oracle::TrimReference ref =
        oracle::trim_reference(to_raw(nodes), delta);
    CHECK(g.survivor_mask == ref.survivors);
  }
}

TEST_CASE("trimmed cluster distance is the exhaustive pairwise minimum") {
  Vector origin = Vector::Zero(2);
  Vector p(2);
  p << 3.0, 4.0;
  CHECK(trimmed_cluster_distance({origin}, {origin}) == 0.0);
  CHECK(trimmed_cluster_distance({origin}, {p}) == doctest::Approx(5.0));
  CHECK_THROWS_AS(trimmed_cluster_distance({}, {p}), InvalidInput);

  Rng rng(36);
  std::vector<Vector> a = random_graph(rng, 5, 3);
  std::vector<Vector> b = random_graph(rng, 5, 3);
  double expect = std::numeric_limits<double>::infinity();
  for (const Vector& x : a) {
    for (const Vector& y : b) {
      expect = std::min(expect, oracle::euclidean(testsupport::to_std(x),
                                                  testsupport::to_std(y)));
    }
  }
  CHECK(trimmed_cluster_distance(a, b) == expect);
  CHECK(trimmed_cluster_distance(b, a) == expect);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "nhac/metrics.hpp"
#include "test_support.hpp"

using namespace nhac;
using testsupport::WarningCapture;
namespace oracle = testsupport::oracle;

namespace {

Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(i, j) = rows[i][j];
    }
  }
  return m;
}

}  // namespace

TEST_CASE("perfect distances give perfect rank-1 and mAP") {
  // query q matches gallery q exactly
  std::vector<std::vector<double>> d = {
      {0.0, 1.0, 1.0}, {1.0, 0.0, 1.0}, {1.0, 1.0, 0.0}};
  const std::vector<long> qids = {1, 2, 3};
  const std::vector<long> gids = {1, 2, 3};
  const Matrix m = to_matrix(d);
  CHECK(cmc_rank(m, qids, gids, 1) == 1.0);
  CHECK(mean_ap(m, qids, gids) == 1.0);
}

TEST_CASE("rank-k is non-decreasing in k") {
  Rng rng(61);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<double>> d(6, std::vector<double>(8));
  for (auto& row : d) {
    for (double& x : row) x = unit(rng);
  }
  const std::vector<long> qids = {1, 2, 3, 1, 2, 3};
  const std::vector<long> gids = {1, 1, 2, 2, 3, 3, 4, 4};
  const Matrix m = to_matrix(d);
  double previous = 0.0;
  for (int k = 1; k <= 8; ++k) {
    const double r = cmc_rank(m, qids, gids, k);
    CHECK(r >= previous);
    previous = r;
  }
  CHECK(previous == 1.0);  // every query has a match, so rank-max is perfect
}

TEST_CASE("handcrafted 3x4 case matches the exhaustive reference") {
  const std::vector<std::vector<double>> d = {
      {0.9, 0.1, 0.5, 0.3}, {0.2, 0.8, 0.6, 0.4}, {0.7, 0.6, 0.2, 0.1}};
  const std::vector<long> qids = {1, 2, 3};
  const std::vector<long> gids = {2, 1, 3, 1};
  const Matrix m = to_matrix(d);
  const oracle::RetrievalReference ref =
      oracle::retrieval_reference(d, qids, gids);
  CHECK(cmc_rank(m, qids, gids, 1) == doctest::Approx(ref.rank1).epsilon(1e-12));
  CHECK(cmc_rank(m, qids, gids, 5) == doctest::Approx(ref.rank5).epsilon(1e-12));
  CHECK(mean_ap(m, qids, gids) == doctest::Approx(ref.map).epsilon(1e-12));
}

TEST_CASE("queries without any gallery match are excluded with a warning") {
  const std::vector<std::vector<double>> d = {{0.1, 0.2}, {0.3, 0.1}};
  const std::vector<long> qids = {1, 9};  // identity 9 never in gallery
  const std::vector<long> gids = {1, 2};
  WarningCapture warnings;
  CHECK(cmc_rank(to_matrix(d), qids, gids, 1) == 1.0);
  CHECK(warnings.any_contains("no gallery match"));
  CHECK_THROWS_AS(cmc_rank(to_matrix(d), {7, 9}, gids, 1), InvalidInput);
}

TEST_CASE("AP follows the precision-at-match-rank convention") {
  SUBCASE("relevance pattern 0,1,0,1 scores one half") {
    const std::vector<std::vector<double>> d = {{0.1, 0.2, 0.3, 0.4}};
    const std::vector<long> qids = {5};
    const std::vector<long> gids = {1, 5, 2, 5};
    CHECK(mean_ap(to_matrix(d), qids, gids) ==
          doctest::Approx(0.5).epsilon(1e-12));
    CHECK(oracle::average_precision({0, 1, 0, 1}) ==
          doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("single relevant entry ranked last scores 1/G") {
    const int g = 7;
    std::vector<std::vector<double>> d(1, std::vector<double>(g));
    std::vector<long> gids(g, 2);
    gids[g - 1] = 5;
    for (int i = 0; i < g; ++i) d[0][i] = 0.1 * (i + 1);
    CHECK(mean_ap(to_matrix(d), {5}, gids) ==
          doctest::Approx(1.0 / g).epsilon(1e-12));
  }
  SUBCASE("identity relabeling leaves mAP unchanged") {
    Rng rng(62);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::vector<double>> d(4, std::vector<double>(6));
    for (auto& row : d) {
      for (double& x : row) x = unit(rng);
    }
    const std::vector<long> qids = {1, 2, 1, 2};
    const std::vector<long> gids = {1, 2, 1, 2, 1, 2};
    std::vector<long> qids2 = {101, 202, 101, 202};
    std::vector<long> gids2 = {101, 202, 101, 202, 101, 202};
    CHECK(mean_ap(to_matrix(d), qids, gids) ==
          mean_ap(to_matrix(d), qids2, gids2));
  }
}

TEST_CASE("pairwise f1 worked examples") {
  SUBCASE("matching partitions score 1 regardless of label names") {
    const std::vector<int> labels = {4, 4, 9, 9, 2};
    const std::vector<long> ids = {1, 1, 2, 2, 3};
    const PairwiseScore s = pairwise_f1(labels, ids);
    CHECK(s.precision == 1.0);
    CHECK(s.recall == 1.0);
    CHECK(s.f1 == 1.0);
  }
  SUBCASE("one merged cluster over a split truth") {
    // truth {a,b},{c}; predicted {a,b,c}
    const PairwiseScore s = pairwise_f1({1, 1, 1}, {1, 1, 2});
    CHECK(s.precision == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(s.recall == 1.0);
    CHECK(s.f1 == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("all singletons against a multi-member truth") {
    const PairwiseScore s = pairwise_f1({1, 2, 3}, {1, 1, 1});
    CHECK(s.precision == 1.0);  // vacuous
    CHECK(s.recall == 0.0);
    CHECK(s.f1 == 0.0);
  }
  SUBCASE("cluster-id permutation leaves scores unchanged") {
    Rng rng(63);
    for (int trial = 0; trial < 30; ++trial) {
      std::vector<int> labels(12);
      std::vector<long> ids(12);
      for (int i = 0; i < 12; ++i) {
        labels[i] = 1 + static_cast<int>(rng() % 4);
        ids[i] = 1 + static_cast<int>(rng() % 3);
      }
      std::vector<int> renamed(12);
      const int perm[4] = {3, 1, 4, 2};
      for (int i = 0; i < 12; ++i) renamed[i] = perm[labels[i] - 1];
      const PairwiseScore a = pairwise_f1(labels, ids);
      const PairwiseScore b = pairwise_f1(renamed, ids);
      CHECK(a.f1 == b.f1);
      CHECK(a.precision == b.precision);
      CHECK(a.recall == b.recall);
    }
  }
  SUBCASE("random instances match the pair-counting reference") {
    Rng rng(64);
    for (int trial = 0; trial < 50; ++trial) {
      const int n = 2 + static_cast<int>(rng() % 19);
      std::vector<int> labels(n);
      std::vector<long> ids(n);
      for (int i = 0; i < n; ++i) {
        labels[i] = 1 + static_cast<int>(rng() % 5);
        ids[i] = 1 + static_cast<int>(rng() % 4);
      }
      const oracle::PairCounts c = oracle::pair_counts(labels, ids);
      const PairwiseScore s = pairwise_f1(labels, ids);
      const double p =
          c.same_cluster == 0 ? 1.0 : double(c.both) / c.same_cluster;
      const double r =
          c.same_identity == 0 ? 1.0 : double(c.both) / c.same_identity;
      CHECK(s.precision == doctest::Approx(p).epsilon(1e-12));
      CHECK(s.recall == doctest::Approx(r).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(pairwise_f1({1}, {1, 2}), InvalidInput);
}

TEST_CASE("trim quality scores trimmed nodes against planted noise") {
  using Masks = std::vector<std::vector<bool>>;
  using Kinds = std::vector<std::vector<FrameKind>>;
  SUBCASE("exact detection") {
    const Masks masks = {{true, false, true}, {false, true, true}};
    const Kinds kinds = {
        {FrameKind::kEasy, FrameKind::kNoise, FrameKind::kHard},
        {FrameKind::kNoise, FrameKind::kEasy, FrameKind::kEasy}};
    const auto score = trim_quality(masks, kinds);
    REQUIRE(score.has_value());
    CHECK(score->precision == 1.0);
    CHECK(score->recall == 1.0);
  }
  SUBCASE("nothing trimmed with noise present") {
    const Masks masks = {{true, true}};
    const Kinds kinds = {{FrameKind::kNoise, FrameKind::kEasy}};
    const auto score = trim_quality(masks, kinds);
    REQUIRE(score.has_value());
    CHECK(score->precision == 1.0);  // vacuous
    CHECK(score->recall == 0.0);
  }
  SUBCASE("unknown kinds make the metric unavailable") {
    const Masks masks = {{true, false}};
    const Kinds kinds = {{FrameKind::kEasy, FrameKind::kUnknown}};
    CHECK_FALSE(trim_quality(masks, kinds).has_value());
    CHECK_FALSE(trim_quality(masks, {}).has_value());
  }
  SUBCASE("random instances match a confusion-matrix reference") {
    Rng rng(65);
    for (int trial = 0; trial < 50; ++trial) {
      Masks masks(3);
      Kinds kinds(3);
      long trimmed = 0, noise = 0, hit = 0;
      for (int t = 0; t < 3; ++t) {
        const int len = 1 + static_cast<int>(rng() % 12);
        for (int j = 0; j < len; ++j) {
          const bool keep = rng() % 3 != 0;
          const FrameKind kind =
              rng() % 4 == 0 ? FrameKind::kNoise
                             : (rng() % 2 ? FrameKind::kEasy : FrameKind::kHard);
          masks[t].push_back(keep);
          kinds[t].push_back(kind);
          trimmed += !keep;
          noise += kind == FrameKind::kNoise;
          hit += !keep && kind == FrameKind::kNoise;
        }
      }
      const auto score = trim_quality(masks, kinds);
      REQUIRE(score.has_value());
      CHECK(score->precision ==
            doctest::Approx(trimmed == 0 ? 1.0 : double(hit) / trimmed));
      CHECK(score->recall ==
            doctest::Approx(noise == 0 ? 1.0 : double(hit) / noise));
    }
  }
}

TEST_CASE("node percentages aggregate splits and masks") {
  SUBCASE("no trimming means zero noise percentage") {
    std::vector<NodeSplit> splits(1);
    splits[0].easy = {0, 1};
    splits[0].hard = {2, 3};
    const std::vector<std::vector<bool>> masks = {{true, true, true, true}};
    const NodePercentages pct = node_percentages(splits, masks);
    CHECK(pct.noise_pct == 0.0);
    CHECK(pct.hard_pct == doctest::Approx(50.0));
  }
  SUBCASE("percentages stay in range and conserve the node count") {
    Rng rng(66);
    for (int trial = 0; trial < 30; ++trial) {
      std::vector<NodeSplit> splits;
      std::vector<std::vector<bool>> masks;
      std::size_t total = 0, survivors = 0, trimmed = 0;
      for (int t = 0; t < 4; ++t) {
        const int len = 1 + static_cast<int>(rng() % 10);
        NodeSplit split;
        std::vector<bool> mask;
        for (int j = 0; j < len; ++j) {
          (rng() % 2 ? split.easy : split.hard).push_back(j);
          const bool keep = rng() % 4 != 0;
          mask.push_back(keep);
          ++total;
          survivors += keep;
          trimmed += !keep;
        }
        splits.push_back(split);
        masks.push_back(mask);
      }
      const NodePercentages pct = node_percentages(splits, masks);
      CHECK(pct.hard_pct >= 0.0);
      CHECK(pct.hard_pct <= 100.0);
      CHECK(pct.noise_pct >= 0.0);
      CHECK(pct.noise_pct <= 100.0);
      CHECK(trimmed + survivors == total);
      CHECK(pct.noise_pct == doctest::Approx(100.0 * trimmed / total));
    }
  }
}

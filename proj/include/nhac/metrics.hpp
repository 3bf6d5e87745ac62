#pragma once

#include <optional>
#include <vector>

#include "nhac/common.hpp"
#include "nhac/dataset.hpp"
#include "nhac/resample.hpp"

namespace nhac {

// Fraction of queries whose k nearest gallery entries (ties broken by
// gallery index) contain a matching identity. Queries with no gallery match
// are excluded with a warning.
double cmc_rank(const Matrix& distances, const std::vector<long>& query_ids,
                const std::vector<long>& gallery_ids, int k);

// Mean over queries of average precision: precision evaluated at each
// correct-match rank, averaged over that query's matches.
double mean_ap(const Matrix& distances, const std::vector<long>& query_ids,
               const std::vector<long>& gallery_ids);

struct PairwiseScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Precision/recall/F1 over all tracklet pairs: a pair is predicted positive
// when it shares a cluster and truly positive when it shares an identity.
// An empty denominator scores 1 (nothing asserted, nothing wrong).
PairwiseScore pairwise_f1(const std::vector<int>& pseudo_labels,
                          const std::vector<long>& identities);

struct TrimScore {
  double precision = 0.0;
  double recall = 0.0;
};

// Scores trimmed nodes against ground-truth noise kinds. Returns nothing
// when kind annotations are absent.
std::optional<TrimScore> trim_quality(
    const std::vector<std::vector<bool>>& survivor_masks,
    const std::vector<std::vector<FrameKind>>& kinds);

struct NodePercentages {
  double hard_pct = 0.0;
  double noise_pct = 0.0;  // trimmed share of all nodes
};

NodePercentages node_percentages(
    const std::vector<NodeSplit>& splits,
    const std::vector<std::vector<bool>>& survivor_masks);

}  // namespace nhac

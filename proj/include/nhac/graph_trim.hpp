#pragma once

#include <vector>

#include "nhac/common.hpp"

namespace nhac {

/// One tracklet viewed as a graph: frame embeddings as nodes, their average
/// as the central node. Trimming drops nodes whose squared similarity
/// deviation exceeds a threshold derived from the graph itself, so noisy
/// frames stop biasing the tracklet feature used for merging.
struct TrackletGraph {
  std::vector<Vector> node_features;
  Vector centroid;
  std::vector<double> similarities;  // cosine(node, centroid)

  // Populated by trim():
  std::vector<double> deviations;  // (1 - similarity)^2
  double threshold = 0.0;
  std::vector<bool> survivor_mask;
  Vector trimmed_feature;

  int size() const { return static_cast<int>(node_features.size()); }
};

// Centroid and per-node similarities. A zero centroid (possible for exactly
// cancelling embeddings) defines every similarity as 0, with a warning.
TrackletGraph build_graph(std::vector<Vector> node_embeddings);

// threshold = sum(deviations) / (count * delta). Larger delta lowers the
// threshold and trims more aggressively.
double dynamic_threshold(const std::vector<double>& deviations, double delta);

// Marks node j as noise iff deviation[j] > threshold (strict), then averages
// the survivors into trimmed_feature. When nothing is trimmed the original
// centroid is reused bitwise. For delta <= 1 the survivor set is provably
// non-empty: all deviations above their scaled mean would need delta > 1.
void trim(TrackletGraph& graph, double delta);

// Minimum pairwise Euclidean distance between two sets of trimmed features.
double trimmed_cluster_distance(const std::vector<Vector>& cluster_a,
                                const std::vector<Vector>& cluster_b);

}  // namespace nhac

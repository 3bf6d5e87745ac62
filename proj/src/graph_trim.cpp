#include "nhac/graph_trim.hpp"

#include <limits>

namespace nhac {

TrackletGraph build_graph(std::vector<Vector> node_embeddings) {
  if (node_embeddings.empty()) {
    throw InvalidInput("build_graph: tracklet has no nodes");
  }
  TrackletGraph g;
  g.centroid = mean_vector(node_embeddings);
  if (g.centroid.norm() == 0.0) {
    warn("tracklet centroid is the zero vector; node similarities default to 0");
  }
  g.similarities.reserve(node_embeddings.size());
  for (const Vector& f : node_embeddings) {
    g.similarities.push_back(cosine(f, g.centroid));
  }
  g.node_features = std::move(node_embeddings);
  return g;
}

double dynamic_threshold(const std::vector<double>& deviations, double delta) {
  if (deviations.empty()) {
    throw InvalidInput("dynamic_threshold: no deviations given");
  }
  if (!(delta > 0.0)) {
    throw ConfigError("delta must be positive");
  }
  double sum = 0.0;
  for (double u : deviations) {
    sum += u;
  }
  return sum / (static_cast<double>(deviations.size()) * delta);
}

void trim(TrackletGraph& graph, double delta) {
  const std::size_t n = graph.node_features.size();
  if (n == 0 || graph.similarities.size() != n) {
    throw InvalidInput("trim: graph must be built before trimming");
  }
  graph.deviations.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double gap = 1.0 - graph.similarities[j];
    graph.deviations[j] = gap * gap;
  }
  graph.threshold = dynamic_threshold(graph.deviations, delta);
  graph.survivor_mask.assign(n, true);
  std::vector<Vector> survivors;
  survivors.reserve(n);
  bool any_trimmed = false;
  for (std::size_t j = 0; j < n; ++j) {
    if (graph.deviations[j] > graph.threshold) {
      graph.survivor_mask[j] = false;
      any_trimmed = true;
    } else {
      survivors.push_back(graph.node_features[j]);
    }
  }
  if (!any_trimmed) {
    graph.trimmed_feature = graph.centroid;
    return;
  }
  if (survivors.empty()) {
    // Only reachable with delta > 1; keep the least deviant node.
    warn("trim removed every node (delta > 1); keeping the closest node");
    std::size_t best = 0;
    for (std::size_t j = 1; j < n; ++j) {
      if (graph.deviations[j] < graph.deviations[best]) {
        best = j;
      }
    }
    graph.survivor_mask[best] = true;
    graph.trimmed_feature = graph.node_features[best];
    return;
  }
  graph.trimmed_feature = mean_vector(survivors);
}

double trimmed_cluster_distance(const std::vector<Vector>& cluster_a,
                                const std::vector<Vector>& cluster_b) {
  if (cluster_a.empty() || cluster_b.empty()) {
    throw InvalidInput("trimmed_cluster_distance: empty cluster");
  }
  double best = std::numeric_limits<double>::infinity();
  for (const Vector& a : cluster_a) {
    for (const Vector& b : cluster_b) {
      const double d = euclidean_distance(a, b);
      if (d < best) {
        best = d;
      }
    }
  }
  return best;
}

}  // namespace nhac

#include "nhac/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace nhac {

namespace {

// Live cluster ids in ascending order plus each cluster's member tracklets.
struct LiveClusters {
  std::vector<int> ids;
  std::vector<std::vector<int>> members;  // parallel to ids
};

LiveClusters collect_live(const std::vector<int>& assignment) {
  std::map<int, std::vector<int>> by_id;
  for (int t = 0; t < static_cast<int>(assignment.size()); ++t) {
    by_id[assignment[t]].push_back(t);
  }
  LiveClusters live;
  live.ids.reserve(by_id.size());
  live.members.reserve(by_id.size());
  for (auto& [id, members] : by_id) {
    live.ids.push_back(id);
    live.members.push_back(std::move(members));
  }
  return live;
}

double single_linkage(const std::vector<int>& a, const std::vector<int>& b,
                      const std::vector<Vector>& feats) {
  double best = std::numeric_limits<double>::infinity();
  for (int i : a) {
    for (int j : b) {
      const double d = euclidean_distance(feats[i], feats[j]);
      if (d < best) {
        best = d;
      }
    }
  }
  return best;
}

Matrix base_distances(const LiveClusters& live,
                      const std::vector<Vector>& feats) {
  const int c = static_cast<int>(live.ids.size());
  Matrix dist = Matrix::Zero(c, c);
  for (int i = 0; i < c; ++i) {
    for (int j = i + 1; j < c; ++j) {
      const double d = single_linkage(live.members[i], live.members[j], feats);
      dist(i, j) = d;
      dist(j, i) = d;
    }
  }
  return dist;
}

}  // namespace

ClusterState ClusterState::singletons(int tracklet_count) {
  if (tracklet_count < 1) {
    throw InvalidInput("init_clusters: need at least one tracklet");
  }
  ClusterState s;
  s.assignment_.resize(tracklet_count);
  std::iota(s.assignment_.begin(), s.assignment_.end(), 1);
  s.cluster_count_ = tracklet_count;
  return s;
}

void ClusterState::merge_step(const std::vector<Vector>& tracklet_features,
                              double merge_percent, bool budget_from_initial) {
  if (static_cast<int>(tracklet_features.size()) != tracklet_count()) {
    throw InvalidInput("merge_step: feature count does not match tracklet count");
  }
  if (!(merge_percent > 0.0) || !(merge_percent < 1.0)) {
    throw ConfigError("merge percentage must lie in (0, 1)");
  }
  ++steps_done_;
  if (cluster_count_ <= 1) {
    warn("merge_step: only one cluster left; nothing to merge");
    return;
  }
  const int basis = budget_from_initial ? tracklet_count() : cluster_count_;
  const int budget = std::max(
      1, static_cast<int>(std::floor(static_cast<double>(basis) * merge_percent)));
  const int merges = std::min(budget, cluster_count_ - 1);

  LiveClusters live = collect_live(assignment_);
  Matrix dist = base_distances(live, tracklet_features);
  const int c = static_cast<int>(live.ids.size());
  std::vector<bool> dead(c, false);

  for (int step = 0; step < merges; ++step) {
    int best_i = -1, best_j = -1;
    double best_d = std::numeric_limits<double>::infinity();
    // Scanning in ascending id order makes the first strict minimum the
    // lexicographically smallest pair among ties.
    for (int i = 0; i < c; ++i) {
      if (dead[i]) continue;
      for (int j = i + 1; j < c; ++j) {
        if (dead[j]) continue;
        if (dist(i, j) < best_d) {
          best_d = dist(i, j);
          best_i = i;
          best_j = j;
        }
      }
    }
    merge_log_.push_back(
        {steps_done_, live.ids[best_i], live.ids[best_j], best_d});
    for (int k = 0; k < c; ++k) {
      if (dead[k] || k == best_i || k == best_j) continue;
      const double d = std::min(dist(k, best_i), dist(k, best_j));
      dist(k, best_i) = d;
      dist(best_i, k) = d;
    }
    dead[best_j] = true;
    for (int& a : assignment_) {
      if (a == live.ids[best_j]) {
        a = live.ids[best_i];
      }
    }
    --cluster_count_;
  }
}

std::vector<int> ClusterState::pseudo_labels() const {
  std::map<int, int> dense;
  for (int id : assignment_) {
    dense.emplace(id, 0);
  }
  int next = 1;
  for (auto& [id, label] : dense) {
    label = next++;
  }
  std::vector<int> labels;
  labels.reserve(assignment_.size());
  for (int id : assignment_) {
    labels.push_back(dense.at(id));
  }
  return labels;
}

Matrix cluster_distance_matrix(const ClusterState& state,
                               const std::vector<Vector>& tracklet_features) {
  if (static_cast<int>(tracklet_features.size()) != state.tracklet_count()) {
    throw InvalidInput("cluster_distance_matrix: feature count mismatch");
  }
  return base_distances(collect_live(state.assignment()), tracklet_features);
}

LookupTable rebuild_lookup(const ClusterState& state,
                           const std::vector<Vector>& tracklet_features,
                           double tau) {
  if (static_cast<int>(tracklet_features.size()) != state.tracklet_count()) {
    throw InvalidInput("rebuild_lookup: feature count mismatch");
  }
  const std::vector<int> labels = state.pseudo_labels();
  const int c = state.cluster_count();
  const Eigen::Index dim = tracklet_features.front().size();
  Matrix columns = Matrix::Zero(dim, c);
  std::vector<int> counts(c, 0);
  for (std::size_t t = 0; t < tracklet_features.size(); ++t) {
    if (tracklet_features[t].size() != dim) {
      throw InvalidInput("rebuild_lookup: features of mixed dimension");
    }
    columns.col(labels[t] - 1) += tracklet_features[t];
    ++counts[labels[t] - 1];
  }
  for (int j = 0; j < c; ++j) {
    columns.col(j) /= static_cast<double>(counts[j]);
  }
  // The LookupTable constructor normalizes columns (basis fallback on zero).
  return LookupTable(std::move(columns), tau);
}

}  // namespace nhac

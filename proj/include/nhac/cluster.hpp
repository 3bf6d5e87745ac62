#pragma once

#include <vector>

#include "nhac/common.hpp"
#include "nhac/lookup.hpp"

namespace nhac {

/// Bottom-up cluster bookkeeping: every tracklet starts as its own cluster
/// and merge steps repeatedly join the globally nearest pair under
/// single-linkage distance.
class ClusterState {
 public:
  struct MergeRecord {
    int iteration = 0;   // which merge_step produced this merge (1-based)
    int cluster_a = 0;   // surviving cluster id
    int cluster_b = 0;   // absorbed cluster id (always > cluster_a)
    double distance = 0.0;
  };

  // One singleton cluster per tracklet; cluster ids are 1..n.
  static ClusterState singletons(int tracklet_count);

  int tracklet_count() const { return static_cast<int>(assignment_.size()); }
  int cluster_count() const { return cluster_count_; }
  const std::vector<int>& assignment() const { return assignment_; }
  const std::vector<MergeRecord>& merge_log() const { return merge_log_; }
  int merge_steps_done() const { return steps_done_; }

  // Performs max(1, floor(basis * merge_percent)) nearest-pair merges, where
  // basis is the initial tracklet count (or the live cluster count when
  // budget_from_initial is false), stopping early at a single cluster.
  // Cluster distances are seeded as minimum pairwise feature distances and
  // maintained with the single-linkage rule d(X, A+B) = min(d(X,A), d(X,B)).
  // Equidistant candidates resolve to the smallest (id, id) pair.
  void merge_step(const std::vector<Vector>& tracklet_features,
                  double merge_percent, bool budget_from_initial = true);

  // Live cluster ids remapped, in ascending order, onto dense labels 1..C.
  std::vector<int> pseudo_labels() const;

 private:
  std::vector<int> assignment_;  // tracklet index -> live cluster id
  int cluster_count_ = 0;
  int steps_done_ = 0;
  std::vector<MergeRecord> merge_log_;
};

// Current single-linkage distances between live clusters, indexed by the
// position of each cluster id in ascending order. Symmetric, zero diagonal.
Matrix cluster_distance_matrix(const ClusterState& state,
                               const std::vector<Vector>& tracklet_features);

// One unit-norm column per cluster: the normalized mean of the member
// tracklet features, ordered like pseudo_labels().
LookupTable rebuild_lookup(const ClusterState& state,
                           const std::vector<Vector>& tracklet_features,
                           double tau);

}  // namespace nhac

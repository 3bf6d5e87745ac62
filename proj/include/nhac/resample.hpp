#pragma once

#include <string>
#include <vector>

#include "nhac/common.hpp"

namespace nhac {

/// Easy/hard partition of a tracklet's nodes by their similarity to the
/// central node. Nodes at or above the mean similarity count as easy.
struct NodeSplit {
  std::vector<int> easy;  // node indices, ascending
  std::vector<int> hard;
  double mean_similarity = 0.0;
};

NodeSplit split_nodes(const std::vector<double>& similarities);

enum class Resampling { kOver, kUnder, kOverUnder };

Resampling resampling_from_string(const std::string& name);
std::string to_string(Resampling criterion);

/// Multiset of node indices a tracklet's training frames are drawn from.
struct ResampledSet {
  std::vector<int> indices;
  Resampling criterion = Resampling::kOver;
};

// When easy outnumbers a non-empty hard set, the hard set is topped up to
// the easy set's size: one full copy (so no hard node is dropped) plus
// uniform draws with replacement. Otherwise both sets pass through
// unchanged. An empty hard set passes the easy set through.
ResampledSet oversample(const NodeSplit& split, Rng& rng);

// Keeps the hard set and a uniform without-replacement selection of
// len(hard) easy nodes (all of them when hard is the larger set).
ResampledSet undersample(const NodeSplit& split, Rng& rng);

// Union of the oversampled hard set and the undersampled easy selection.
ResampledSet over_under_union(const NodeSplit& split, Rng& rng);

ResampledSet resample(const NodeSplit& split, Resampling criterion, Rng& rng);

// count uniform draws from the eligible pool: without replacement while the
// pool is large enough, with replacement once it is smaller than count.
std::vector<int> sample_training_frames(const std::vector<int>& eligible,
                                        int count, Rng& rng);

/// One training triple over equal-length frame parts. Members index into the
/// current batch; parts index the contiguous M/K-frame chunks of a member's
/// sampled frames.
struct Triplet {
  int anchor_member = 0;
  int anchor_part = 0;
  int positive_part = 0;
  int negative_member = 0;
  int negative_part = 0;
};

// One triple per batch member: a random pair of distinct parts of its own
// frames plus a random part of a member carrying a different pseudo label.
// With a single part (K = 1) or a single distinct label in the batch there
// is nothing valid to build; the batch is skipped with a warning.
std::vector<Triplet> build_triplets(const std::vector<int>& member_labels,
                                    int frames_per_member, int parts,
                                    Rng& rng);

}  // namespace nhac

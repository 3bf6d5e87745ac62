#include "nhac/resample.hpp"

#include <algorithm>
#include <numeric>

namespace nhac {

namespace {

int uniform_index(Rng& rng, int count) {
  return std::uniform_int_distribution<int>(0, count - 1)(rng);
}

// n distinct uniform draws, in draw order.
std::vector<int> draw_without_replacement(const std::vector<int>& pool, int n,
                                          Rng& rng) {
  std::vector<int> scratch = pool;
  std::vector<int> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const int j = i + uniform_index(rng, static_cast<int>(scratch.size()) - i);
    std::swap(scratch[i], scratch[j]);
    out.push_back(scratch[i]);
  }
  return out;
}

}  // namespace

NodeSplit split_nodes(const std::vector<double>& similarities) {
  if (similarities.empty()) {
    throw InvalidInput("split_nodes: no similarities given");
  }
  NodeSplit split;
  double sum = 0.0;
  for (double s : similarities) {
    sum += s;
  }
  split.mean_similarity = sum / static_cast<double>(similarities.size());
  for (int j = 0; j < static_cast<int>(similarities.size()); ++j) {
    if (similarities[j] >= split.mean_similarity) {
      split.easy.push_back(j);
    } else {
      split.hard.push_back(j);
    }
  }
  return split;
}

Resampling resampling_from_string(const std::string& name) {
  if (name == "over") return Resampling::kOver;
  if (name == "under") return Resampling::kUnder;
  if (name == "over_under") return Resampling::kOverUnder;
  throw ConfigError("unknown resampling criterion '" + name +
                    "' (expected over, under, or over_under)");
}

std::string to_string(Resampling criterion) {
  switch (criterion) {
    case Resampling::kOver: return "over";
    case Resampling::kUnder: return "under";
    case Resampling::kOverUnder: return "over_under";
  }
  return "over";
}

namespace {

// One full copy of hard plus uniform-with-replacement fills, total |easy|.
std::vector<int> oversampled_hard(const NodeSplit& split, Rng& rng) {
  std::vector<int> out = split.hard;
  const int extra =
      static_cast<int>(split.easy.size()) - static_cast<int>(split.hard.size());
  for (int i = 0; i < extra; ++i) {
    out.push_back(
        split.hard[uniform_index(rng, static_cast<int>(split.hard.size()))]);
  }
  return out;
}

std::vector<int> undersampled_easy(const NodeSplit& split, Rng& rng) {
  const int n = static_cast<int>(
      std::min(split.hard.size(), split.easy.size()));
  return draw_without_replacement(split.easy, n, rng);
}

}  // namespace

ResampledSet oversample(const NodeSplit& split, Rng& rng) {
  if (split.easy.empty()) {
    throw InvalidInput("oversample: easy set is empty");
  }
  ResampledSet set;
  set.criterion = Resampling::kOver;
  set.indices = split.easy;
  if (split.hard.empty()) {
    return set;
  }
  const std::vector<int> hard_part =
      split.easy.size() > split.hard.size() ? oversampled_hard(split, rng)
                                            : split.hard;
  set.indices.insert(set.indices.end(), hard_part.begin(), hard_part.end());
  return set;
}

ResampledSet undersample(const NodeSplit& split, Rng& rng) {
  if (split.easy.empty()) {
    throw InvalidInput("undersample: easy set is empty");
  }
  ResampledSet set;
  set.criterion = Resampling::kUnder;
  if (split.hard.empty()) {
    set.indices = split.easy;
    return set;
  }
  set.indices = undersampled_easy(split, rng);
  set.indices.insert(set.indices.end(), split.hard.begin(), split.hard.end());
  return set;
}

ResampledSet over_under_union(const NodeSplit& split, Rng& rng) {
  if (split.easy.empty()) {
    throw InvalidInput("over_under_union: easy set is empty");
  }
  ResampledSet set;
  set.criterion = Resampling::kOverUnder;
  if (split.hard.empty()) {
    set.indices = split.easy;
    return set;
  }
  set.indices = split.easy.size() > split.hard.size()
                    ? oversampled_hard(split, rng)
                    : split.hard;
  const std::vector<int> easy_part = undersampled_easy(split, rng);
  set.indices.insert(set.indices.end(), easy_part.begin(), easy_part.end());
  return set;
}

ResampledSet resample(const NodeSplit& split, Resampling criterion, Rng& rng) {
  switch (criterion) {
    case Resampling::kOver: return oversample(split, rng);
    case Resampling::kUnder: return undersample(split, rng);
    case Resampling::kOverUnder: return over_under_union(split, rng);
  }
  throw ConfigError("unhandled resampling criterion");
}

std::vector<int> sample_training_frames(const std::vector<int>& eligible,
                                        int count, Rng& rng) {
  if (eligible.empty()) {
    throw InvalidInput("sample_training_frames: empty pool");
  }
  if (count <= 0) {
    throw InvalidInput("sample_training_frames: count must be positive");
  }
  const int n = static_cast<int>(eligible.size());
  if (n >= count) {
    return draw_without_replacement(eligible, count, rng);
  }
  std::vector<int> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    out.push_back(eligible[uniform_index(rng, n)]);
  }
  return out;
}

std::vector<Triplet> build_triplets(const std::vector<int>& member_labels,
                                    int frames_per_member, int parts,
                                    Rng& rng) {
  if (parts < 1 || frames_per_member < 1) {
    throw InvalidInput("build_triplets: counts must be positive");
  }
  if (frames_per_member % parts != 0) {
    throw InvalidInput("build_triplets: frame count must be divisible by the part count");
  }
  if (parts < 2) {
    warn("triplet construction skipped: a single part leaves no positive pair");
    return {};
  }
  bool two_labels = false;
  for (std::size_t i = 1; i < member_labels.size(); ++i) {
    if (member_labels[i] != member_labels[0]) {
      two_labels = true;
      break;
    }
  }
  if (!two_labels) {
    warn("triplet construction skipped: batch carries a single pseudo label");
    return {};
  }
  std::vector<Triplet> out;
  out.reserve(member_labels.size());
  for (int i = 0; i < static_cast<int>(member_labels.size()); ++i) {
    std::vector<int> others;
    for (int j = 0; j < static_cast<int>(member_labels.size()); ++j) {
      if (member_labels[j] != member_labels[i]) {
        others.push_back(j);
      }
    }
    Triplet t;
    t.anchor_member = i;
    t.anchor_part = uniform_index(rng, parts);
    t.positive_part = uniform_index(rng, parts - 1);
    if (t.positive_part >= t.anchor_part) {
      ++t.positive_part;
    }
    t.negative_member = others[uniform_index(rng, static_cast<int>(others.size()))];
    t.negative_part = uniform_index(rng, parts);
    out.push_back(t);
  }
  return out;
}

}  // namespace nhac

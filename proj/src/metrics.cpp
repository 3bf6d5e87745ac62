#include "nhac/metrics.hpp"

#include <algorithm>
#include <numeric>

namespace nhac {

namespace {

void check_retrieval_shapes(const Matrix& distances,
                            const std::vector<long>& query_ids,
                            const std::vector<long>& gallery_ids) {
  if (distances.rows() != static_cast<Eigen::Index>(query_ids.size()) ||
      distances.cols() != static_cast<Eigen::Index>(gallery_ids.size())) {
    throw InvalidInput("distance matrix does not match id list sizes");
  }
  if (gallery_ids.empty()) {
    throw InvalidInput("empty gallery");
  }
}

// Gallery indices ordered by (distance, index).
std::vector<int> ranked_gallery(const Matrix& distances, int query) {
  std::vector<int> order(distances.cols());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (distances(query, a) != distances(query, b)) {
      return distances(query, a) < distances(query, b);
    }
    return a < b;
  });
  return order;
}

bool has_match(long query_id, const std::vector<long>& gallery_ids) {
  return std::find(gallery_ids.begin(), gallery_ids.end(), query_id) !=
         gallery_ids.end();
}

}  // namespace

double cmc_rank(const Matrix& distances, const std::vector<long>& query_ids,
                const std::vector<long>& gallery_ids, int k) {
  check_retrieval_shapes(distances, query_ids, gallery_ids);
  if (k < 1) {
    throw InvalidInput("cmc_rank: k must be at least 1");
  }
  int counted = 0;
  int hits = 0;
  for (int q = 0; q < static_cast<int>(query_ids.size()); ++q) {
    if (!has_match(query_ids[q], gallery_ids)) {
      warn("query " + std::to_string(q) +
           " has no gallery match; excluded from CMC");
      continue;
    }
    ++counted;
    const std::vector<int> order = ranked_gallery(distances, q);
    const int top = std::min<int>(k, static_cast<int>(order.size()));
    for (int r = 0; r < top; ++r) {
      if (gallery_ids[order[r]] == query_ids[q]) {
        ++hits;
        break;
      }
    }
  }
  if (counted == 0) {
    throw InvalidInput("cmc_rank: no query has a gallery match");
  }
  return static_cast<double>(hits) / static_cast<double>(counted);
}

double mean_ap(const Matrix& distances, const std::vector<long>& query_ids,
               const std::vector<long>& gallery_ids) {
  check_retrieval_shapes(distances, query_ids, gallery_ids);
  int counted = 0;
  double ap_sum = 0.0;
  for (int q = 0; q < static_cast<int>(query_ids.size()); ++q) {
    if (!has_match(query_ids[q], gallery_ids)) {
      warn("query " + std::to_string(q) +
           " has no gallery match; excluded from mAP");
      continue;
    }
    ++counted;
    const std::vector<int> order = ranked_gallery(distances, q);
    int matches = 0;
    double precision_sum = 0.0;
    for (int r = 0; r < static_cast<int>(order.size()); ++r) {
      if (gallery_ids[order[r]] == query_ids[q]) {
        ++matches;
        precision_sum += static_cast<double>(matches) / (r + 1);
      }
    }
    ap_sum += precision_sum / matches;
  }
  if (counted == 0) {
    throw InvalidInput("mean_ap: no query has a gallery match");
  }
  return ap_sum / counted;
}

PairwiseScore pairwise_f1(const std::vector<int>& pseudo_labels,
                          const std::vector<long>& identities) {
  if (pseudo_labels.size() != identities.size()) {
    throw InvalidInput("pairwise_f1: label and identity lists differ in length");
  }
  long same_cluster = 0;
  long same_identity = 0;
  long both = 0;
  const int n = static_cast<int>(pseudo_labels.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const bool cluster = pseudo_labels[i] == pseudo_labels[j];
      const bool identity = identities[i] == identities[j];
      same_cluster += cluster;
      same_identity += identity;
      both += cluster && identity;
    }
  }
  PairwiseScore score;
  score.precision =
      same_cluster == 0 ? 1.0 : static_cast<double>(both) / same_cluster;
  score.recall =
      same_identity == 0 ? 1.0 : static_cast<double>(both) / same_identity;
  const double denom = score.precision + score.recall;
  score.f1 = denom == 0.0 ? 0.0 : 2.0 * score.precision * score.recall / denom;
  return score;
}

std::optional<TrimScore> trim_quality(
    const std::vector<std::vector<bool>>& survivor_masks,
    const std::vector<std::vector<FrameKind>>& kinds) {
  if (kinds.empty()) {
    return std::nullopt;
  }
  if (kinds.size() != survivor_masks.size()) {
    throw InvalidInput("trim_quality: mask and kind lists differ in length");
  }
  long trimmed = 0;
  long noise = 0;
  long trimmed_noise = 0;
  for (std::size_t t = 0; t < survivor_masks.size(); ++t) {
    if (kinds[t].size() != survivor_masks[t].size()) {
      throw InvalidInput("trim_quality: mask and kind lengths differ for a tracklet");
    }
    for (std::size_t j = 0; j < kinds[t].size(); ++j) {
      if (kinds[t][j] == FrameKind::kUnknown) {
        return std::nullopt;
      }
      const bool is_trimmed = !survivor_masks[t][j];
      const bool is_noise = kinds[t][j] == FrameKind::kNoise;
      trimmed += is_trimmed;
      noise += is_noise;
      trimmed_noise += is_trimmed && is_noise;
    }
  }
  TrimScore score;
  score.precision =
      trimmed == 0 ? 1.0 : static_cast<double>(trimmed_noise) / trimmed;
  score.recall = noise == 0 ? 1.0 : static_cast<double>(trimmed_noise) / noise;
  return score;
}

NodePercentages node_percentages(
    const std::vector<NodeSplit>& splits,
    const std::vector<std::vector<bool>>& survivor_masks) {
  std::size_t total = 0;
  std::size_t trimmed = 0;
  for (const auto& mask : survivor_masks) {
    total += mask.size();
    for (bool kept : mask) {
      trimmed += !kept;
    }
  }
  std::size_t hard = 0;
  for (const NodeSplit& split : splits) {
    hard += split.hard.size();
  }
  NodePercentages pct;
  if (total > 0) {
    pct.hard_pct = 100.0 * static_cast<double>(hard) / total;
    pct.noise_pct = 100.0 * static_cast<double>(trimmed) / total;
  }
  return pct;
}

}  // namespace nhac

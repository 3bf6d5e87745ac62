#include "nhac/train.hpp"

#include <cmath>

namespace nhac {

namespace {

Vector part_mean(const std::vector<Vector>& embeddings, int part,
                 int part_len) {
  Vector sum = Vector::Zero(embeddings.front().size());
  const int begin = part * part_len;
  for (int i = begin; i < begin + part_len; ++i) {
    sum += embeddings[i];
  }
  return sum / static_cast<double>(part_len);
}

}  // namespace

std::vector<Vector> accumulate_batch_gradients(
    const EmbeddingModel& model, const LookupTable& table,
    const std::vector<TrainSample>& samples,
    const std::vector<Triplet>& triplets, int parts,
    const LossWeights& weights, double margin, bool train_mode, Rng* rng,
    ParameterGradients& grads, BatchLosses& losses) {
  if (samples.empty()) {
    throw InvalidInput("training batch is empty");
  }
  const int frames_per_sample = static_cast<int>(samples.front().frames.size());
  if (frames_per_sample < 1) {
    throw InvalidInput("training sample carries no frames");
  }
  for (const TrainSample& s : samples) {
    if (static_cast<int>(s.frames.size()) != frames_per_sample) {
      throw InvalidInput("training samples carry differing frame counts");
    }
    if (s.label < 1 || s.label > table.cluster_count()) {
      throw InvalidInput("training sample label outside the lookup table");
    }
  }
  if (!triplets.empty() &&
      (parts < 2 || frames_per_sample % parts != 0)) {
    throw InvalidInput("triplet parts must divide the per-sample frame count");
  }

  const int n = static_cast<int>(samples.size());
  std::vector<std::vector<EmbeddingModel::Forward>> cache(n);
  std::vector<std::vector<Vector>> embeds(n);
  std::vector<std::vector<Vector>> frame_grads(n);
  std::vector<Vector> features(n);

  for (int i = 0; i < n; ++i) {
    cache[i].reserve(frames_per_sample);
    embeds[i].reserve(frames_per_sample);
    for (const Vector& frame : samples[i].frames) {
      cache[i].push_back(model.forward(frame, train_mode, rng));
      embeds[i].push_back(cache[i].back().out);
    }
    features[i] = tracklet_feature(embeds[i]);
    frame_grads[i].assign(frames_per_sample,
                          Vector::Zero(model.embed_dim));
    const LookupTable::IdLossResult id = table.id_loss(features[i],
                                                       samples[i].label);
    losses.id_sum += id.loss;
    ++losses.sample_count;
    const Vector per_frame =
        (weights.id / frames_per_sample) * id.grad_v;
    for (int f = 0; f < frames_per_sample; ++f) {
      frame_grads[i][f] += per_frame;
    }
  }

  if (!triplets.empty()) {
    const int part_len = frames_per_sample / parts;
    for (const Triplet& t : triplets) {
      const Vector anchor = part_mean(embeds[t.anchor_member], t.anchor_part,
                                      part_len);
      const Vector positive = part_mean(embeds[t.anchor_member],
                                        t.positive_part, part_len);
      const Vector negative = part_mean(embeds[t.negative_member],
                                        t.negative_part, part_len);
      const TripletLossResult tl =
          triplet_loss(anchor, positive, negative, margin);
      losses.triplet_sum += tl.loss;
      ++losses.triplet_count;
      const double scale = weights.triplet / part_len;
      for (int f = 0; f < part_len; ++f) {
        frame_grads[t.anchor_member][t.anchor_part * part_len + f] +=
            scale * tl.grad_anchor;
        frame_grads[t.anchor_member][t.positive_part * part_len + f] +=
            scale * tl.grad_positive;
        frame_grads[t.negative_member][t.negative_part * part_len + f] +=
            scale * tl.grad_negative;
      }
    }
  }

  for (int i = 0; i < n; ++i) {
    for (int f = 0; f < frames_per_sample; ++f) {
      model.backward(cache[i][f], frame_grads[i][f], grads);
    }
  }
  return features;
}

BatchLosses train_step(EmbeddingModel& model, LookupTable& table,
                       SgdOptimizer& optimizer,
                       const std::vector<TrainSample>& samples,
                       const std::vector<Triplet>& triplets, int parts,
                       const LossWeights& weights, double margin, int epoch,
                       Rng& rng) {
  ParameterGradients grads = ParameterGradients::zeros_like(model);
  BatchLosses losses;
  const std::vector<Vector> features = accumulate_batch_gradients(
      model, table, samples, triplets, parts, weights, margin,
      /*train_mode=*/true, &rng, grads, losses);
  const double total =
      weights.id * losses.id_sum + weights.triplet * losses.triplet_sum;
  if (!std::isfinite(total)) {
    throw TrainingAborted("non-finite training loss (id=" +
                          format_double(losses.id_sum) + ", triplet=" +
                          format_double(losses.triplet_sum) + ")");
  }
  optimizer.step(model, grads, epoch);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    table.update(samples[i].label, normalize_or_basis(features[i]));
  }
  return losses;
}

}  // namespace nhac

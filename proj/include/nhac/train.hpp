#pragma once

#include <vector>

#include "nhac/common.hpp"
#include "nhac/lookup.hpp"
#include "nhac/model.hpp"
#include "nhac/resample.hpp"

namespace nhac {

/// One tracklet's contribution to a training batch: its sampled frame
/// features plus the pseudo label used as the classification target.
struct TrainSample {
  std::vector<Vector> frames;
  int label = 0;  // 1-based cluster label
};

struct LossWeights {
  double id = 1.0;
  double triplet = 1.0;
};

struct BatchLosses {
  double id_sum = 0.0;
  double triplet_sum = 0.0;
  int sample_count = 0;
  int triplet_count = 0;
};

// Forward/backward over one batch against a frozen lookup table. Each
// sample's feature is the average of its frame embeddings; triplet parts are
// averages of contiguous frame chunks, so they reuse the same embeddings.
// Gradients accumulate into grads; the weighted batch loss comes back via
// losses. Returns each sample's pooled feature (needed for lookup updates).
std::vector<Vector> accumulate_batch_gradients(
    const EmbeddingModel& model, const LookupTable& table,
    const std::vector<TrainSample>& samples,
    const std::vector<Triplet>& triplets, int parts,
    const LossWeights& weights, double margin, bool train_mode, Rng* rng,
    ParameterGradients& grads, BatchLosses& losses);

// One SGD step over a batch: gradients from the frozen table, a momentum
// update of the model, then one lookup-column midpoint update per sample in
// batch order. A non-finite batch loss aborts with TrainingAborted before
// any state changes.
BatchLosses train_step(EmbeddingModel& model, LookupTable& table,
                       SgdOptimizer& optimizer,
                       const std::vector<TrainSample>& samples,
                       const std::vector<Triplet>& triplets, int parts,
                       const LossWeights& weights, double margin, int epoch,
                       Rng& rng);

}  // namespace nhac

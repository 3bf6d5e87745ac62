#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nhac/cluster.hpp"
#include "nhac/dataset.hpp"
#include "nhac/graph_trim.hpp"
#include "nhac/model.hpp"
#include "nhac/resample.hpp"

namespace nhac {

struct PipelineConfig {
  double merge_percent = 0.05;
  int triplet_parts = 2;
  double delta = 0.5;
  double triplet_margin = 0.3;
  double softmax_temperature = 0.1;
  int frames_per_sample = 16;
  int batch_size = 16;
  double dropout = 0.5;
  int first_stage_epochs = 20;
  int later_stage_epochs = 2;
  double learning_rate = 0.1;
  int lr_drop_epoch = 15;
  double lr_after_drop = 0.01;
  double momentum = 0.9;
  int iterations = 18;
  Resampling resampling = Resampling::kOver;
  bool gtm_enabled = true;
  bool nrm_enabled = true;
  std::uint64_t seed = 1;
  int hidden_dim = 32;
  int embed_dim = 16;
  double triplet_weight = 1.0;
  // By default re-sampling works on trimming survivors; this restores the
  // whole tracklet as the eligible node set.
  bool nrm_on_full_tracklet = false;
  // Merge budget m = floor(basis * merge_percent): basis is the initial
  // tracklet count when true, the live cluster count when false.
  bool merge_budget_from_initial = true;

  void validate() const;
  static PipelineConfig from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;
};

/// One report line: the model/cluster state after an iteration's retraining
/// (iteration 0 covers the first training stage). Metrics that need absent
/// annotations, or a module that did not run, stay unset.
struct IterationRow {
  int iteration = 0;
  int clusters = 0;
  std::optional<double> rank1, rank5, rank10, map;
  std::optional<double> pair_precision, pair_recall, pair_f1;
  std::optional<double> trim_precision, trim_recall;
  std::optional<double> hard_pct, noise_pct;
  double id_loss = 0.0;
  double triplet_loss = 0.0;
};

struct RunReport {
  PipelineConfig config;
  std::vector<IterationRow> rows;
  std::vector<ClusterState::MergeRecord> merge_log;
  std::vector<long> tracklet_ids;
  std::vector<int> final_labels;
  double wall_seconds = 0.0;

  // Row with the highest mAP (nullptr when retrieval metrics are absent).
  const IterationRow* best_row_by_map() const;
};

struct RunResult {
  RunReport report;
  EmbeddingModel model;
};

/// A training abort that keeps everything computed before the bad batch.
struct PipelineAborted : TrainingAborted {
  PipelineAborted(const std::string& message,
                  std::shared_ptr<RunReport> partial)
      : TrainingAborted(message), partial_report(std::move(partial)) {}
  std::shared_ptr<RunReport> partial_report;
};

RunResult run_pipeline(const PipelineConfig& config, const Dataset& dataset,
                       int threads = 1);

struct NamedRun {
  std::string name;
  RunReport report;
};

// Four runs off one seed and one dataset: both modules off, trimming only,
// re-sampling only, both on.
std::vector<NamedRun> run_ablation(const PipelineConfig& config,
                                   const Dataset& dataset, int threads = 1);

struct DeltaSweepRow {
  double delta = 0.0;
  double best_rank1 = 0.0;
  double best_map = 0.0;
};

std::vector<DeltaSweepRow> run_delta_sweep(const PipelineConfig& config,
                                           const Dataset& dataset,
                                           const std::vector<double>& deltas,
                                           int threads = 1);

// One run per re-sampling criterion with re-sampling forced on.
std::vector<NamedRun> run_resampling_comparison(const PipelineConfig& config,
                                                const Dataset& dataset,
                                                int threads = 1);

// Frame embeddings (eval mode) for every tracklet.
std::vector<std::vector<Vector>> extract_embeddings(const EmbeddingModel& model,
                                                    const Dataset& dataset,
                                                    int threads);

struct TrimOutcome {
  std::vector<TrackletGraph> graphs;
  std::vector<Vector> features;              // per-tracklet merge features
  std::vector<std::vector<bool>> survivor_masks;
};

// Builds every tracklet graph; with trimming disabled the merge feature is
// the plain centroid, bitwise, and every node survives.
TrimOutcome trim_tracklets(const std::vector<std::vector<Vector>>& embeddings,
                           bool gtm_enabled, double delta);

}  // namespace nhac

#include "nhac/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>

#include "nhac/metrics.hpp"
#include "nhac/train.hpp"

namespace nhac {

void PipelineConfig::validate() const {
  if (!(merge_percent > 0.0) || !(merge_percent < 1.0)) {
    throw ConfigError("merge_percent must lie in (0, 1)");
  }
  if (triplet_parts < 1) throw ConfigError("triplet_parts must be at least 1");
  if (!(delta > 0.0) || delta > 1.0) {
    throw ConfigError("delta must lie in (0, 1]");
  }
  if (triplet_margin < 0.0) throw ConfigError("triplet_margin must be non-negative");
  if (!(softmax_temperature > 0.0)) {
    throw ConfigError("softmax_temperature must be positive");
  }
  if (frames_per_sample < 1) {
    throw ConfigError("frames_per_sample must be at least 1");
  }
  if (frames_per_sample % triplet_parts != 0) {
    throw ConfigError("frames_per_sample must be divisible by triplet_parts");
  }
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (dropout < 0.0 || dropout >= 1.0) {
    throw ConfigError("dropout must lie in [0, 1)");
  }
  if (first_stage_epochs < 0 || later_stage_epochs < 0) {
    throw ConfigError("epoch counts must be non-negative");
  }
  if (learning_rate < 0.0 || lr_after_drop < 0.0) {
    throw ConfigError("learning rates must be non-negative");
  }
  if (lr_drop_epoch < 0) throw ConfigError("lr_drop_epoch must be non-negative");
  if (momentum < 0.0 || momentum >= 1.0) {
    throw ConfigError("momentum must lie in [0, 1)");
  }
  if (iterations < 0) throw ConfigError("iterations must be non-negative");
  if (hidden_dim < 1 || embed_dim < 1) {
    throw ConfigError("model dimensions must be positive");
  }
  if (triplet_weight < 0.0) {
    throw ConfigError("triplet_weight must be non-negative");
  }
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {
      "merge_percent", "triplet_parts", "delta", "triplet_margin",
      "softmax_temperature", "frames_per_sample", "batch_size", "dropout",
      "first_stage_epochs", "later_stage_epochs", "learning_rate",
      "lr_drop_epoch", "lr_after_drop", "momentum", "iterations", "resampling",
      "gtm_enabled", "nrm_enabled", "seed", "hidden_dim", "embed_dim",
      "triplet_weight", "nrm_on_full_tracklet", "merge_budget_from_initial"};
  if (!j.is_object()) {
    throw ConfigError("pipeline config must be a JSON object");
  }
  for (const auto& item : j.items()) {
    if (known.count(item.key()) == 0) {
      throw ConfigError("unknown config key '" + item.key() + "'");
    }
  }
  PipelineConfig c;
  try {
    c.merge_percent = j.value("merge_percent", c.merge_percent);
    c.triplet_parts = j.value("triplet_parts", c.triplet_parts);
    c.delta = j.value("delta", c.delta);
    c.triplet_margin = j.value("triplet_margin", c.triplet_margin);
    c.softmax_temperature = j.value("softmax_temperature", c.softmax_temperature);
    c.frames_per_sample = j.value("frames_per_sample", c.frames_per_sample);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.dropout = j.value("dropout", c.dropout);
    c.first_stage_epochs = j.value("first_stage_epochs", c.first_stage_epochs);
    c.later_stage_epochs = j.value("later_stage_epochs", c.later_stage_epochs);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.lr_drop_epoch = j.value("lr_drop_epoch", c.lr_drop_epoch);
    c.lr_after_drop = j.value("lr_after_drop", c.lr_after_drop);
    c.momentum = j.value("momentum", c.momentum);
    c.iterations = j.value("iterations", c.iterations);
    if (j.contains("resampling")) {
      c.resampling = resampling_from_string(j.at("resampling"));
    }
    c.gtm_enabled = j.value("gtm_enabled", c.gtm_enabled);
    c.nrm_enabled = j.value("nrm_enabled", c.nrm_enabled);
    c.seed = j.value("seed", c.seed);
    c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.triplet_weight = j.value("triplet_weight", c.triplet_weight);
    c.nrm_on_full_tracklet =
        j.value("nrm_on_full_tracklet", c.nrm_on_full_tracklet);
    c.merge_budget_from_initial =
        j.value("merge_budget_from_initial", c.merge_budget_from_initial);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("pipeline config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::ordered_json PipelineConfig::to_json() const {
  nlohmann::ordered_json j;
  j["merge_percent"] = merge_percent;
  j["triplet_parts"] = triplet_parts;
  j["delta"] = delta;
  j["triplet_margin"] = triplet_margin;
  j["softmax_temperature"] = softmax_temperature;
  j["frames_per_sample"] = frames_per_sample;
  j["batch_size"] = batch_size;
  j["dropout"] = dropout;
  j["first_stage_epochs"] = first_stage_epochs;
  j["later_stage_epochs"] = later_stage_epochs;
  j["learning_rate"] = learning_rate;
  j["lr_drop_epoch"] = lr_drop_epoch;
  j["lr_after_drop"] = lr_after_drop;
  j["momentum"] = momentum;
  j["iterations"] = iterations;
  j["resampling"] = to_string(resampling);
  j["gtm_enabled"] = gtm_enabled;
  j["nrm_enabled"] = nrm_enabled;
  j["seed"] = seed;
  j["hidden_dim"] = hidden_dim;
  j["embed_dim"] = embed_dim;
  j["triplet_weight"] = triplet_weight;
  j["nrm_on_full_tracklet"] = nrm_on_full_tracklet;
  j["merge_budget_from_initial"] = merge_budget_from_initial;
  return j;
}

const IterationRow* RunReport::best_row_by_map() const {
  const IterationRow* best = nullptr;
  for (const IterationRow& row : rows) {
    if (row.map && (!best || *row.map > *best->map)) {
      best = &row;
    }
  }
  return best;
}

std::vector<std::vector<Vector>> extract_embeddings(const EmbeddingModel& model,
                                                    const Dataset& dataset,
                                                    int threads) {
  std::vector<std::vector<Vector>> out(dataset.tracklet_count());
  parallel_for(dataset.tracklets.size(), threads,
               [&](std::size_t begin, std::size_t end) {
                 for (std::size_t t = begin; t < end; ++t) {
                   const Tracklet& tracklet = dataset.tracklets[t];
                   out[t].reserve(tracklet.frames.size());
                   for (const FrameRecord& frame : tracklet.frames) {
                     out[t].push_back(model.embed(frame.feature));
                   }
                 }
               });
  return out;
}

TrimOutcome trim_tracklets(const std::vector<std::vector<Vector>>& embeddings,
                           bool gtm_enabled, double delta) {
  TrimOutcome outcome;
  outcome.graphs.reserve(embeddings.size());
  outcome.features.reserve(embeddings.size());
  outcome.survivor_masks.reserve(embeddings.size());
  for (const auto& nodes : embeddings) {
    TrackletGraph graph = build_graph(nodes);
    if (gtm_enabled) {
      trim(graph, delta);
    } else {
      graph.survivor_mask.assign(nodes.size(), true);
      graph.trimmed_feature = graph.centroid;
    }
    outcome.features.push_back(graph.trimmed_feature);
    outcome.survivor_masks.push_back(graph.survivor_mask);
    outcome.graphs.push_back(std::move(graph));
  }
  return outcome;
}

namespace {

struct EvalContext {
  bool retrieval = false;   // identity + >=2 cameras available
  bool identity = false;    // identity ground truth available
  QueryGallerySplit split;
  std::vector<long> query_ids, gallery_ids;
};

EvalContext make_eval_context(const Dataset& dataset) {
  EvalContext ctx;
  ctx.identity = dataset.has_identity;
  if (!dataset.has_identity || !dataset.has_camera) {
    return ctx;
  }
  try {
    ctx.split = split_query_gallery(dataset);
  } catch (const InvalidInput& e) {
    warn(std::string("retrieval metrics unavailable: ") + e.what());
    return ctx;
  }
  if (ctx.split.query.empty()) {
    warn("retrieval metrics unavailable: query set is empty");
    return ctx;
  }
  for (int q : ctx.split.query) {
    ctx.query_ids.push_back(dataset.tracklets[q].identity);
  }
  for (int g : ctx.split.gallery) {
    ctx.gallery_ids.push_back(dataset.tracklets[g].identity);
  }
  ctx.retrieval = true;
  return ctx;
}

// Evaluation features always pool every frame of the tracklet; trimming only
// influences which features the merge step sees.
std::vector<Vector> eval_features(
    const std::vector<std::vector<Vector>>& embeddings) {
  std::vector<Vector> feats;
  feats.reserve(embeddings.size());
  for (const auto& nodes : embeddings) {
    feats.push_back(mean_vector(nodes));
  }
  return feats;
}

void fill_eval_metrics(IterationRow& row, const EvalContext& ctx,
                       const Dataset& dataset,
                       const std::vector<Vector>& features,
                       const std::vector<int>& labels, int threads) {
  if (ctx.identity) {
    std::vector<long> identities;
    identities.reserve(dataset.tracklets.size());
    for (const Tracklet& t : dataset.tracklets) {
      identities.push_back(t.identity);
    }
    const PairwiseScore score = pairwise_f1(labels, identities);
    row.pair_precision = score.precision;
    row.pair_recall = score.recall;
    row.pair_f1 = score.f1;
  }
  if (!ctx.retrieval) {
    return;
  }
  Matrix dist(ctx.split.query.size(), ctx.split.gallery.size());
  parallel_for(ctx.split.query.size(), threads,
               [&](std::size_t begin, std::size_t end) {
                 for (std::size_t q = begin; q < end; ++q) {
                   for (std::size_t g = 0; g < ctx.split.gallery.size(); ++g) {
                     dist(q, g) = euclidean_distance(
                         features[ctx.split.query[q]],
                         features[ctx.split.gallery[g]]);
                   }
                 }
               });
  row.rank1 = cmc_rank(dist, ctx.query_ids, ctx.gallery_ids, 1);
  row.rank5 = cmc_rank(dist, ctx.query_ids, ctx.gallery_ids, 5);
  row.rank10 = cmc_rank(dist, ctx.query_ids, ctx.gallery_ids, 10);
  row.map = mean_ap(dist, ctx.query_ids, ctx.gallery_ids);
}

struct PhaseStats {
  double id_loss_mean = 0.0;
  double triplet_loss_mean = 0.0;
};

// One training phase: epochs of shuffled batches, frames drawn per tracklet
// from its pool. Triplets are built only when re-sampling is enabled. The
// learning-rate schedule restarts with every phase; each retraining stage
// begins at the full rate, which is what lets accuracy keep climbing across
// clustering iterations.
PhaseStats train_phase(EmbeddingModel& model, LookupTable& table,
                       SgdOptimizer& optimizer, const Dataset& dataset,
                       const std::vector<std::vector<int>>& frame_pools,
                       const std::vector<int>& labels, int epochs,
                       const PipelineConfig& cfg, Rng& rng) {
  BatchLosses totals;
  std::vector<int> order(dataset.tracklet_count());
  std::iota(order.begin(), order.end(), 0);
  for (int e = 0; e < epochs; ++e) {
    const int epoch = e + 1;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<TrainSample> samples;
      std::vector<int> batch_labels;
      samples.reserve(stop - start);
      for (std::size_t b = start; b < stop; ++b) {
        const int t = order[b];
        TrainSample sample;
        sample.label = labels[t];
        const std::vector<int> picks = sample_training_frames(
            frame_pools[t], cfg.frames_per_sample, rng);
        sample.frames.reserve(picks.size());
        for (int f : picks) {
          sample.frames.push_back(dataset.tracklets[t].frames[f].feature);
        }
        batch_labels.push_back(sample.label);
        samples.push_back(std::move(sample));
      }
      std::vector<Triplet> triplets;
      if (cfg.nrm_enabled && cfg.triplet_weight > 0.0) {
        triplets = build_triplets(batch_labels, cfg.frames_per_sample,
                                  cfg.triplet_parts, rng);
      }
      // Batch-mean objective: the classification term averages over samples
      // and the triplet term over triples, so the step size tracks the
      // configured learning rate independently of the batch size.
      const LossWeights weights{
          1.0 / static_cast<double>(samples.size()),
          triplets.empty()
              ? 0.0
              : cfg.triplet_weight / static_cast<double>(triplets.size())};
      const BatchLosses batch = train_step(
          model, table, optimizer, samples, triplets, cfg.triplet_parts,
          weights, cfg.triplet_margin, epoch, rng);
      totals.id_sum += batch.id_sum;
      totals.triplet_sum += batch.triplet_sum;
      totals.sample_count += batch.sample_count;
      totals.triplet_count += batch.triplet_count;
    }
  }
  PhaseStats stats;
  if (totals.sample_count > 0) {
    stats.id_loss_mean = totals.id_sum / totals.sample_count;
  }
  if (totals.triplet_count > 0) {
    stats.triplet_loss_mean = totals.triplet_sum / totals.triplet_count;
  }
  return stats;
}

std::vector<std::vector<int>> full_pools(const Dataset& dataset) {
  std::vector<std::vector<int>> pools(dataset.tracklet_count());
  for (int t = 0; t < dataset.tracklet_count(); ++t) {
    pools[t].resize(dataset.tracklets[t].length());
    std::iota(pools[t].begin(), pools[t].end(), 0);
  }
  return pools;
}

}  // namespace

RunResult run_pipeline(const PipelineConfig& config, const Dataset& dataset,
                       int threads) {
  config.validate();
  if (dataset.tracklet_count() == 0) {
    throw InvalidInput("run: dataset has no tracklets");
  }
  dataset.validate();

  const auto t0 = std::chrono::steady_clock::now();
  auto report = std::make_shared<RunReport>();
  report->config = config;
  for (const Tracklet& t : dataset.tracklets) {
    report->tracklet_ids.push_back(t.id);
  }

  Rng rng(config.seed);
  EmbeddingModel model = EmbeddingModel::random_init(
      dataset.dim, config.hidden_dim, config.embed_dim, config.dropout, rng);
  ClusterState state = ClusterState::singletons(dataset.tracklet_count());
  std::vector<int> labels = state.pseudo_labels();
  const EvalContext eval_ctx = make_eval_context(dataset);

  const auto finish = [&](RunReport& r) {
    r.merge_log = state.merge_log();
    r.final_labels = labels;
    r.wall_seconds = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
  };
  const auto guarded_phase = [&](auto&&... args) -> PhaseStats {
    try {
      return train_phase(std::forward<decltype(args)>(args)...);
    } catch (const TrainingAborted& e) {
      finish(*report);
      throw PipelineAborted(e.what(), report);
    }
  };

  // First stage: singleton pseudo labels against a singleton lookup table.
  std::vector<std::vector<Vector>> embeddings =
      extract_embeddings(model, dataset, threads);
  LookupTable table =
      rebuild_lookup(state, eval_features(embeddings), config.softmax_temperature);
  SgdOptimizer optimizer(model, config.learning_rate, config.momentum,
                         config.lr_drop_epoch, config.lr_after_drop);
  PhaseStats stats = guarded_phase(model, table, optimizer, dataset,
                                   full_pools(dataset), labels,
                                   config.first_stage_epochs, config, rng);
  embeddings = extract_embeddings(model, dataset, threads);

  {
    IterationRow row;
    row.iteration = 0;
    row.clusters = state.cluster_count();
    row.id_loss = stats.id_loss_mean;
    row.triplet_loss = stats.triplet_loss_mean;
    fill_eval_metrics(row, eval_ctx, dataset, eval_features(embeddings),
                      labels, threads);
    report->rows.push_back(std::move(row));
  }

  for (int it = 1; it <= config.iterations; ++it) {
    if (state.cluster_count() <= 1) {
      break;
    }
    TrimOutcome trimmed =
        trim_tracklets(embeddings, config.gtm_enabled, config.delta);
    state.merge_step(trimmed.features, config.merge_percent,
                     config.merge_budget_from_initial);
    labels = state.pseudo_labels();
    table = rebuild_lookup(state, trimmed.features, config.softmax_temperature);

    std::vector<std::vector<int>> pools;
    std::vector<NodeSplit> splits;
    if (config.nrm_enabled) {
      pools.resize(dataset.tracklet_count());
      splits.reserve(dataset.tracklet_count());
      const bool on_survivors =
          config.gtm_enabled && !config.nrm_on_full_tracklet;
      for (int t = 0; t < dataset.tracklet_count(); ++t) {
        std::vector<int> eligible;
        const auto& mask = trimmed.survivor_masks[t];
        for (int j = 0; j < static_cast<int>(mask.size()); ++j) {
          if (!on_survivors || mask[j]) {
            eligible.push_back(j);
          }
        }
        NodeSplit split;
        if (on_survivors &&
            eligible.size() != embeddings[t].size()) {
          std::vector<Vector> surviving;
          surviving.reserve(eligible.size());
          for (int j : eligible) {
            surviving.push_back(embeddings[t][j]);
          }
          split = split_nodes(build_graph(std::move(surviving)).similarities);
        } else {
          split = split_nodes(trimmed.graphs[t].similarities);
        }
        const ResampledSet set = resample(split, config.resampling, rng);
        pools[t].reserve(set.indices.size());
        for (int local : set.indices) {
          pools[t].push_back(eligible[local]);
        }
        splits.push_back(std::move(split));
      }
    } else {
      pools = full_pools(dataset);
    }

    stats = guarded_phase(model, table, optimizer, dataset, pools, labels,
                          config.later_stage_epochs, config, rng);
    embeddings = extract_embeddings(model, dataset, threads);

    IterationRow row;
    row.iteration = it;
    row.clusters = state.cluster_count();
    row.id_loss = stats.id_loss_mean;
    row.triplet_loss = stats.triplet_loss_mean;
    fill_eval_metrics(row, eval_ctx, dataset, eval_features(embeddings),
                      labels, threads);
    if (dataset.has_kind) {
      std::vector<std::vector<FrameKind>> kinds(dataset.tracklet_count());
      for (int t = 0; t < dataset.tracklet_count(); ++t) {
        for (const FrameRecord& f : dataset.tracklets[t].frames) {
          kinds[t].push_back(f.kind);
        }
      }
      if (const auto score = trim_quality(trimmed.survivor_masks, kinds)) {
        row.trim_precision = score->precision;
        row.trim_recall = score->recall;
      }
    }
    const NodePercentages pct =
        node_percentages(splits, trimmed.survivor_masks);
    row.noise_pct = pct.noise_pct;
    if (config.nrm_enabled) {
      row.hard_pct = pct.hard_pct;
    }
    report->rows.push_back(std::move(row));
  }

  finish(*report);
  return RunResult{std::move(*report), std::move(model)};
}

std::vector<NamedRun> run_ablation(const PipelineConfig& config,
                                   const Dataset& dataset, int threads) {
  const struct {
    const char* name;
    bool gtm;
    bool nrm;
  } variants[] = {
      {"Baseline", false, false},
      {"NHAC w/o NRM", true, false},
      {"NHAC w/o GTM", false, true},
      {"NHAC", true, true},
  };
  std::vector<NamedRun> runs;
  runs.reserve(4);
  for (const auto& v : variants) {
    PipelineConfig c = config;
    c.gtm_enabled = v.gtm;
    c.nrm_enabled = v.nrm;
    runs.push_back({v.name, run_pipeline(c, dataset, threads).report});
  }
  return runs;
}

std::vector<DeltaSweepRow> run_delta_sweep(const PipelineConfig& config,
                                           const Dataset& dataset,
                                           const std::vector<double>& deltas,
                                           int threads) {
  if (deltas.empty()) {
    throw ConfigError("delta sweep needs at least one delta");
  }
  std::vector<DeltaSweepRow> rows;
  rows.reserve(deltas.size());
  for (double d : deltas) {
    PipelineConfig c = config;
    c.delta = d;
    c.validate();
    const RunReport report = run_pipeline(c, dataset, threads).report;
    DeltaSweepRow row;
    row.delta = d;
    for (const IterationRow& r : report.rows) {
      if (r.rank1 && *r.rank1 > row.best_rank1) row.best_rank1 = *r.rank1;
      if (r.map && *r.map > row.best_map) row.best_map = *r.map;
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<NamedRun> run_resampling_comparison(const PipelineConfig& config,
                                                const Dataset& dataset,
                                                int threads) {
  const struct {
    const char* name;
    Resampling criterion;
  } variants[] = {
      {"Over", Resampling::kOver},
      {"Under", Resampling::kUnder},
      {"Over+Under", Resampling::kOverUnder},
  };
  std::vector<NamedRun> runs;
  runs.reserve(3);
  for (const auto& v : variants) {
    PipelineConfig c = config;
    c.nrm_enabled = true;
    c.resampling = v.criterion;
    runs.push_back({v.name, run_pipeline(c, dataset, threads).report});
  }
  return runs;
}

}  // namespace nhac

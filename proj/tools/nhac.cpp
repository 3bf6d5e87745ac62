// Command-line front end for the nhac library: dataset generation, full
// clustering runs, the diagnostic harnesses, metric re-evaluation, and chart
// rendering.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "nhac/metrics.hpp"
#include "nhac/pipeline.hpp"
#include "nhac/report_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw nhac::ConfigError("cannot open config file: " + path);
  }
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw nhac::ConfigError(path + ": " + e.what());
  }
}

nhac::PipelineConfig load_pipeline_config(const std::string& config_path,
                                          const std::string& seed_override) {
  nhac::PipelineConfig config = config_path.empty()
                                    ? nhac::PipelineConfig{}
                                    : nhac::PipelineConfig::from_json(
                                          load_json_file(config_path));
  if (!seed_override.empty()) {
    config.seed = std::stoull(seed_override);
  }
  return config;
}

int resolve_threads(int flag_value) {
  if (flag_value > 0) {
    return flag_value;
  }
  if (const char* env = std::getenv("NHAC_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) {
      return n;
    }
  }
  return 1;
}

std::vector<double> parse_delta_list(const std::string& text) {
  std::vector<double> deltas;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) {
      deltas.push_back(nhac::parse_double(item));
    }
  }
  return deltas;
}

void print_named_runs(const std::string& header,
                      const std::vector<nhac::NamedRun>& runs) {
  std::cout << header << '\n';
  for (const nhac::NamedRun& run : runs) {
    const nhac::IterationRow* last =
        run.report.rows.empty() ? nullptr : &run.report.rows.back();
    std::cout << "  " << run.name << ":";
    if (last) {
      if (last->rank1) std::cout << " rank1=" << *last->rank1;
      if (last->map) std::cout << " mAP=" << *last->map;
      if (last->pair_f1) std::cout << " F1=" << *last->pair_f1;
      std::cout << " clusters=" << last->clusters;
    }
    std::cout << '\n';
  }
}

std::string variant_slug(std::string name) {
  for (char& c : name) {
    if (!std::isalnum(static_cast<unsigned char>(c))) {
      c = '_';
    }
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return name;
}

int run_main(int argc, char** argv) {
  CLI::App app{"Noise and hard frame aware clustering over tracklet data"};
  app.require_subcommand(1);

  std::string config_path, data_path, out_path, seed_override;
  int threads_flag = 0;

  auto add_common = [&](CLI::App* cmd, bool needs_data) {
    cmd->add_option("--config", config_path, "JSON config file");
    if (needs_data) {
      cmd->add_option("--data", data_path, "dataset file")->required();
    }
    cmd->add_option("--seed", seed_override, "seed override");
    cmd->add_option("--threads", threads_flag,
                    "worker threads (default: NHAC_THREADS or 1)");
  };

  CLI::App* generate = app.add_subcommand(
      "generate", "Generate a synthetic tracklet dataset");
  generate->add_option("--config", config_path, "JSON spec file");
  generate->add_option("--out", out_path, "output dataset file")->required();
  generate->add_option("--seed", seed_override, "seed override");

  CLI::App* run = app.add_subcommand("run", "Run the clustering pipeline");
  add_common(run, true);
  run->add_option("--out", out_path, "report directory")->required();

  CLI::App* ablate = app.add_subcommand(
      "ablate", "Compare module combinations on one dataset and seed");
  add_common(ablate, true);
  ablate->add_option("--out", out_path, "report directory")->required();

  std::string deltas_text = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9";
  CLI::App* sweep = app.add_subcommand(
      "sweep-delta", "Run the pipeline across trimming delta values");
  add_common(sweep, true);
  sweep->add_option("--out", out_path, "report directory")->required();
  sweep->add_option("--deltas", deltas_text, "comma-separated delta values");

  CLI::App* compare = app.add_subcommand(
      "compare-resampling", "Compare the re-sampling criteria");
  add_common(compare, true);
  compare->add_option("--out", out_path, "report directory")->required();

  std::string model_path, labels_path;
  CLI::App* eval = app.add_subcommand(
      "eval", "Recompute retrieval metrics from a saved model");
  eval->add_option("--model", model_path, "model state file")->required();
  eval->add_option("--data", data_path, "dataset file")->required();
  eval->add_option("--labels", labels_path, "labels.tsv for clustering metrics");
  eval->add_option("--out", out_path, "optional CSV output file");
  eval->add_option("--threads", threads_flag, "worker threads");

  std::string report_path;
  CLI::App* plot = app.add_subcommand("plot", "Render SVG charts from a report CSV");
  plot->add_option("--report", report_path, "report.csv or sweep.csv")->required();
  plot->add_option("--out", out_path, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const int threads = resolve_threads(threads_flag);

  if (generate->parsed()) {
    nhac::SyntheticSpec spec = config_path.empty()
                                   ? nhac::SyntheticSpec{}
                                   : nhac::SyntheticSpec::from_json(
                                         load_json_file(config_path));
    if (!seed_override.empty()) {
      spec.seed = std::stoull(seed_override);
    }
    const nhac::Dataset data = nhac::generate(spec);
    nhac::save_dataset(data, out_path);
    std::cout << "wrote " << data.tracklet_count() << " tracklets ("
              << data.frame_count() << " frames, dim " << data.dim << ") to "
              << out_path << '\n';
    return 0;
  }

  if (plot->parsed()) {
    std::ifstream in(report_path);
    if (!in) {
      throw nhac::ConfigError("cannot open report file: " + report_path);
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    const nhac::ParsedCsv csv = nhac::parse_csv(buffer.str());
    fs::create_directories(out_path);
    const auto series_for = [&](const std::string& x_col,
                                const std::string& y_col) {
      nhac::Series s{y_col, {}, {}};
      const auto xi = csv.column(x_col);
      const auto yi = csv.column(y_col);
      if (!xi || !yi) return s;
      for (const auto& row : csv.rows) {
        if (row[*yi].empty()) continue;
        s.x.push_back(nhac::parse_double(row[*xi]));
        s.y.push_back(nhac::parse_double(row[*yi]));
      }
      return s;
    };
    int charts = 0;
    if (csv.column("delta")) {
      std::vector<nhac::Series> series;
      for (const char* col : {"best_rank1", "best_map"}) {
        nhac::Series s = series_for("delta", col);
        if (!s.x.empty()) series.push_back(std::move(s));
      }
      nhac::atomic_write_file(
          fs::path(out_path) / "sweep.svg",
          nhac::line_chart_svg("Best metrics across delta", "delta", "score",
                               series));
      ++charts;
    } else if (csv.column("iteration")) {
      std::vector<nhac::Series> series;
      for (const char* col : {"rank1", "map", "pair_f1"}) {
        nhac::Series s = series_for("iteration", col);
        if (!s.x.empty()) series.push_back(std::move(s));
      }
      if (!series.empty()) {
        nhac::atomic_write_file(
            fs::path(out_path) / "trajectory.svg",
            nhac::line_chart_svg("Metrics across clustering iterations",
                                 "iteration", "score", series));
        ++charts;
      }
      nhac::Series clusters = series_for("iteration", "clusters");
      if (!clusters.x.empty()) {
        nhac::atomic_write_file(
            fs::path(out_path) / "clusters.svg",
            nhac::line_chart_svg("Cluster count across iterations",
                                 "iteration", "clusters", {clusters}));
        ++charts;
      }
    } else {
      throw nhac::ConfigError(
          "report CSV has neither an 'iteration' nor a 'delta' column");
    }
    std::cout << "wrote " << charts << " chart(s) to " << out_path << '\n';
    return 0;
  }

  if (eval->parsed()) {
    const nhac::EmbeddingModel model = nhac::load_model(model_path);
    const nhac::Dataset data = nhac::load_dataset(data_path);
    data.validate();
    const auto embeddings = nhac::extract_embeddings(model, data, threads);
    std::vector<nhac::Vector> features;
    features.reserve(embeddings.size());
    for (const auto& nodes : embeddings) {
      features.push_back(nhac::mean_vector(nodes));
    }
    const nhac::QueryGallerySplit split = nhac::split_query_gallery(data);
    std::vector<long> qids, gids;
    for (int q : split.query) qids.push_back(data.tracklets[q].identity);
    for (int g : split.gallery) gids.push_back(data.tracklets[g].identity);
    nhac::Matrix dist(split.query.size(), split.gallery.size());
    for (std::size_t q = 0; q < split.query.size(); ++q) {
      for (std::size_t g = 0; g < split.gallery.size(); ++g) {
        dist(q, g) = nhac::euclidean_distance(features[split.query[q]],
                                              features[split.gallery[g]]);
      }
    }
    std::ostringstream csv;
    csv << "metric,value\n";
    csv << "rank1," << nhac::format_double(nhac::cmc_rank(dist, qids, gids, 1)) << '\n';
    csv << "rank5," << nhac::format_double(nhac::cmc_rank(dist, qids, gids, 5)) << '\n';
    csv << "rank10," << nhac::format_double(nhac::cmc_rank(dist, qids, gids, 10)) << '\n';
    csv << "map," << nhac::format_double(nhac::mean_ap(dist, qids, gids)) << '\n';
    if (!labels_path.empty()) {
      std::ifstream in(labels_path);
      if (!in) {
        throw nhac::ConfigError("cannot open labels file: " + labels_path);
      }
      std::map<long, int> label_of;
      std::string line;
      std::getline(in, line);  // header
      long id = 0;
      int label = 0;
      while (in >> id >> label) {
        label_of[id] = label;
      }
      std::vector<int> labels;
      std::vector<long> identities;
      for (const nhac::Tracklet& t : data.tracklets) {
        const auto it = label_of.find(t.id);
        if (it == label_of.end()) {
          throw nhac::InvalidInput("labels file misses tracklet " +
                                   std::to_string(t.id));
        }
        labels.push_back(it->second);
        identities.push_back(t.identity);
      }
      const nhac::PairwiseScore f1 = nhac::pairwise_f1(labels, identities);
      csv << "pair_precision," << nhac::format_double(f1.precision) << '\n';
      csv << "pair_recall," << nhac::format_double(f1.recall) << '\n';
      csv << "pair_f1," << nhac::format_double(f1.f1) << '\n';
    }
    std::cout << csv.str();
    if (!out_path.empty()) {
      nhac::atomic_write_file(out_path, csv.str());
    }
    return 0;
  }

  // The remaining subcommands share config + dataset loading.
  const nhac::PipelineConfig config =
      load_pipeline_config(config_path, seed_override);
  const nhac::Dataset data = nhac::load_dataset(data_path);

  if (run->parsed()) {
    try {
      const nhac::RunResult result = nhac::run_pipeline(config, data, threads);
      nhac::write_run_outputs(result.report, &result.model, out_path);
      std::cout << "wrote report (" << result.report.rows.size()
                << " rows) to " << out_path << '\n';
    } catch (const nhac::PipelineAborted& e) {
      if (e.partial_report) {
        nhac::write_run_outputs(*e.partial_report, nullptr, out_path);
      }
      std::cerr << "error: training aborted: " << e.what()
                << " (partial report written to " << out_path << ")\n";
      return 2;
    }
    return 0;
  }

  if (ablate->parsed()) {
    const std::vector<nhac::NamedRun> runs =
        nhac::run_ablation(config, data, threads);
    fs::create_directories(out_path);
    nhac::atomic_write_file(fs::path(out_path) / "ablation.csv",
                            nhac::ablation_csv(runs));
    for (const nhac::NamedRun& named : runs) {
      nhac::write_run_outputs(named.report, nullptr,
                              fs::path(out_path) / variant_slug(named.name));
    }
    print_named_runs("ablation results:", runs);
    return 0;
  }

  if (sweep->parsed()) {
    const std::vector<double> deltas = parse_delta_list(deltas_text);
    const std::vector<nhac::DeltaSweepRow> rows =
        nhac::run_delta_sweep(config, data, deltas, threads);
    fs::create_directories(out_path);
    nhac::atomic_write_file(fs::path(out_path) / "sweep.csv",
                            nhac::sweep_csv(rows));
    std::vector<nhac::Series> series(2);
    series[0].name = "best Rank-1";
    series[1].name = "best mAP";
    for (const nhac::DeltaSweepRow& r : rows) {
      series[0].x.push_back(r.delta);
      series[0].y.push_back(r.best_rank1);
      series[1].x.push_back(r.delta);
      series[1].y.push_back(r.best_map);
    }
    nhac::atomic_write_file(
        fs::path(out_path) / "sweep.svg",
        nhac::line_chart_svg("Best metrics across delta", "delta", "score",
                             series));
    for (const nhac::DeltaSweepRow& r : rows) {
      std::cout << "delta=" << r.delta << " best_rank1=" << r.best_rank1
                << " best_map=" << r.best_map << '\n';
    }
    return 0;
  }

  if (compare->parsed()) {
    const std::vector<nhac::NamedRun> runs =
        nhac::run_resampling_comparison(config, data, threads);
    fs::create_directories(out_path);
    nhac::atomic_write_file(fs::path(out_path) / "resampling.csv",
                            nhac::resampling_csv(runs));
    print_named_runs("re-sampling criteria:", runs);
    return 0;
  }

  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_main(argc, argv);
  } catch (const nhac::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const nhac::InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

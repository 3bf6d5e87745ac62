#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nhac/pipeline.hpp"

namespace nhac {

// RFC 4180 quoting: fields containing commas, quotes, or newlines are
// wrapped in double quotes with inner quotes doubled.
std::string csv_escape(const std::string& field);

// Writes content to a temporary sibling and renames it into place, so an
// interrupted run never leaves a truncated file behind.
void atomic_write_file(const std::filesystem::path& path,
                       const std::string& content);

std::string report_csv(const RunReport& report);
std::string merge_log_csv(const RunReport& report);
std::string labels_tsv(const RunReport& report);
std::string ablation_csv(const std::vector<NamedRun>& runs);
std::string sweep_csv(const std::vector<DeltaSweepRow>& rows);
std::string resampling_csv(const std::vector<NamedRun>& runs);

struct ParsedCsv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<int> column(const std::string& name) const;
};

ParsedCsv parse_csv(const std::string& text);

struct Series {
  std::string name;
  std::vector<double> x, y;
};

std::string line_chart_svg(const std::string& title,
                           const std::string& x_label,
                           const std::string& y_label,
                           const std::vector<Series>& series);

std::string bar_chart_svg(const std::string& title, const std::string& y_label,
                          const std::vector<std::pair<std::string, double>>& bars);

// report.csv, config.json, meta.json, labels.tsv, merge_log.csv, model.txt
// (when a model is given), and the SVG charts, all written atomically.
void write_run_outputs(const RunReport& report, const EmbeddingModel* model,
                       const std::filesystem::path& out_dir);

// The charts `write_run_outputs` derives from a report: iteration
// trajectories plus final hard/noise node percentages.
void write_report_plots(const RunReport& report,
                        const std::filesystem::path& out_dir);

}  // namespace nhac

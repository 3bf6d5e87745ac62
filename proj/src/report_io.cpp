#include "nhac/report_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nhac/model.hpp"

namespace nhac {

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) {
    return field;
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') {
      out += '"';
    }
    out += c;
  }
  out += '"';
  return out;
}

void atomic_write_file(const std::filesystem::path& path,
                       const std::string& content) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw InvalidInput("cannot open file for writing: " + tmp.string());
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
      throw InvalidInput("failed while writing: " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

namespace {

std::string cell(const std::optional<double>& value) {
  return value ? format_double(*value) : std::string();
}

}  // namespace

std::string report_csv(const RunReport& report) {
  std::ostringstream out;
  out << "iteration,clusters,rank1,rank5,rank10,map,pair_precision,"
         "pair_recall,pair_f1,trim_precision,trim_recall,hard_pct,noise_pct,"
         "id_loss,triplet_loss\n";
  for (const IterationRow& r : report.rows) {
    out << r.iteration << ',' << r.clusters << ',' << cell(r.rank1) << ','
        << cell(r.rank5) << ',' << cell(r.rank10) << ',' << cell(r.map) << ','
        << cell(r.pair_precision) << ',' << cell(r.pair_recall) << ','
        << cell(r.pair_f1) << ',' << cell(r.trim_precision) << ','
        << cell(r.trim_recall) << ',' << cell(r.hard_pct) << ','
        << cell(r.noise_pct) << ',' << format_double(r.id_loss) << ','
        << format_double(r.triplet_loss) << '\n';
  }
  return out.str();
}

std::string merge_log_csv(const RunReport& report) {
  std::ostringstream out;
  out << "iteration,cluster_a,cluster_b,distance\n";
  for (const auto& m : report.merge_log) {
    out << m.iteration << ',' << m.cluster_a << ',' << m.cluster_b << ','
        << format_double(m.distance) << '\n';
  }
  return out.str();
}

std::string labels_tsv(const RunReport& report) {
  std::ostringstream out;
  out << "tracklet_id\tpseudo_label\n";
  for (std::size_t t = 0; t < report.final_labels.size(); ++t) {
    out << report.tracklet_ids[t] << '\t' << report.final_labels[t] << '\n';
  }
  return out.str();
}

namespace {

const IterationRow* final_row(const RunReport& report) {
  return report.rows.empty() ? nullptr : &report.rows.back();
}

}  // namespace

std::string ablation_csv(const std::vector<NamedRun>& runs) {
  std::ostringstream out;
  out << "variant,final_rank1,final_map,best_rank1,best_map,final_pair_f1,"
         "final_clusters\n";
  for (const NamedRun& run : runs) {
    const IterationRow* last = final_row(run.report);
    const IterationRow* best = run.report.best_row_by_map();
    out << csv_escape(run.name) << ',';
    out << (last ? cell(last->rank1) : std::string()) << ','
        << (last ? cell(last->map) : std::string()) << ','
        << (best ? cell(best->rank1) : std::string()) << ','
        << (best ? cell(best->map) : std::string()) << ','
        << (last ? cell(last->pair_f1) : std::string()) << ','
        << (last ? std::to_string(last->clusters) : std::string()) << '\n';
  }
  return out.str();
}

std::string sweep_csv(const std::vector<DeltaSweepRow>& rows) {
  std::ostringstream out;
  out << "delta,best_rank1,best_map\n";
  for (const DeltaSweepRow& r : rows) {
    out << format_double(r.delta) << ',' << format_double(r.best_rank1) << ','
        << format_double(r.best_map) << '\n';
  }
  return out.str();
}

std::string resampling_csv(const std::vector<NamedRun>& runs) {
  std::ostringstream out;
  out << "criterion,rank1,rank5,rank10,map,best_rank1,best_map\n";
  for (const NamedRun& run : runs) {
    const IterationRow* last = final_row(run.report);
    const IterationRow* best = run.report.best_row_by_map();
    out << csv_escape(run.name) << ','
        << (last ? cell(last->rank1) : std::string()) << ','
        << (last ? cell(last->rank5) : std::string()) << ','
        << (last ? cell(last->rank10) : std::string()) << ','
        << (last ? cell(last->map) : std::string()) << ','
        << (best ? cell(best->rank1) : std::string()) << ','
        << (best ? cell(best->map) : std::string()) << '\n';
  }
  return out.str();
}

std::optional<int> ParsedCsv::column(const std::string& name) const {
  for (int i = 0; i < static_cast<int>(header.size()); ++i) {
    if (header[i] == name) {
      return i;
    }
  }
  return std::nullopt;
}

ParsedCsv parse_csv(const std::string& text) {
  ParsedCsv parsed;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool headers_done = false;
  const auto push_field = [&]() {
    row.push_back(field);
    field.clear();
  };
  const auto push_row = [&]() {
    if (!headers_done) {
      parsed.header = row;
      headers_done = true;
    } else if (!(row.size() == 1 && row[0].empty())) {
      parsed.rows.push_back(row);
    }
    row.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      push_field();
    } else if (c == '\n') {
      push_field();
      push_row();
    } else if (c != '\r') {
      field += c;
    }
  }
  if (!field.empty() || !row.empty()) {
    push_field();
    push_row();
  }
  return parsed;
}

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 400;
constexpr int kMarginLeft = 60;
constexpr int kMarginRight = 120;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 50;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                          "#9467bd", "#ff7f0e", "#8c564b"};

std::string svg_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt_tick(double v) {
  std::ostringstream out;
  out.precision(4);
  out << v;
  return out.str();
}

}  // namespace

std::string line_chart_svg(const std::string& title,
                           const std::string& x_label,
                           const std::string& y_label,
                           const std::vector<Series>& series) {
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool any = false;
  for (const Series& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!any) {
        xmin = xmax = s.x[i];
        ymin = ymax = s.y[i];
        any = true;
      } else {
        xmin = std::min(xmin, s.x[i]);
        xmax = std::max(xmax, s.x[i]);
        ymin = std::min(ymin, s.y[i]);
        ymax = std::max(ymax, s.y[i]);
      }
    }
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  const auto px = [&](double x) {
    return kMarginLeft + (x - xmin) / (xmax - xmin) * plot_w;
  };
  const auto py = [&](double y) {
    return kMarginTop + plot_h - (y - ymin) / (ymax - ymin) * plot_h;
  };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" font-family=\"sans-serif\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" "
         "font-size=\"15\">" << svg_escape(title) << "</text>\n";
  // axes
  out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop << "\" x2=\""
      << kMarginLeft << "\" y2=\"" << kMarginTop + plot_h
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop + plot_h
      << "\" x2=\"" << kMarginLeft + plot_w << "\" y2=\"" << kMarginTop + plot_h
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 4.0;
    const double fy = ymin + (ymax - ymin) * i / 4.0;
    out << "<text x=\"" << px(fx) << "\" y=\"" << kMarginTop + plot_h + 18
        << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt_tick(fx)
        << "</text>\n";
    out << "<text x=\"" << kMarginLeft - 6 << "\" y=\"" << py(fy) + 4
        << "\" text-anchor=\"end\" font-size=\"11\">" << fmt_tick(fy)
        << "</text>\n";
    out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << py(fy) << "\" x2=\""
        << kMarginLeft + plot_w << "\" y2=\"" << py(fy)
        << "\" stroke=\"#dddddd\"/>\n";
  }
  out << "<text x=\"" << kMarginLeft + plot_w / 2 << "\" y=\"" << kHeight - 10
      << "\" text-anchor=\"middle\" font-size=\"12\">" << svg_escape(x_label)
      << "</text>\n";
  out << "<text x=\"15\" y=\"" << kMarginTop + plot_h / 2
      << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 15 "
      << kMarginTop + plot_h / 2 << ")\">" << svg_escape(y_label)
      << "</text>\n";
  int color = 0;
  int legend_y = kMarginTop + 10;
  for (const Series& s : series) {
    const char* stroke = kPalette[color % 6];
    std::ostringstream points;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (i > 0) points << ' ';
      points << px(s.x[i]) << ',' << py(s.y[i]);
    }
    out << "<polyline fill=\"none\" stroke=\"" << stroke
        << "\" stroke-width=\"2\" points=\"" << points.str() << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      out << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i])
          << "\" r=\"2.5\" fill=\"" << stroke << "\"/>\n";
    }
    out << "<line x1=\"" << kWidth - kMarginRight + 10 << "\" y1=\"" << legend_y
        << "\" x2=\"" << kWidth - kMarginRight + 30 << "\" y2=\"" << legend_y
        << "\" stroke=\"" << stroke << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << kWidth - kMarginRight + 35 << "\" y=\""
        << legend_y + 4 << "\" font-size=\"11\">" << svg_escape(s.name)
        << "</text>\n";
    legend_y += 18;
    ++color;
  }
  out << "</svg>\n";
  return out.str();
}

std::string bar_chart_svg(const std::string& title, const std::string& y_label,
                          const std::vector<std::pair<std::string, double>>& bars) {
  double ymax = 1.0;
  for (const auto& [name, value] : bars) {
    ymax = std::max(ymax, value);
  }
  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" font-family=\"sans-serif\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" "
         "font-size=\"15\">" << svg_escape(title) << "</text>\n";
  out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop << "\" x2=\""
      << kMarginLeft << "\" y2=\"" << kMarginTop + plot_h
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop + plot_h
      << "\" x2=\"" << kMarginLeft + plot_w << "\" y2=\"" << kMarginTop + plot_h
      << "\" stroke=\"black\"/>\n";
  out << "<text x=\"15\" y=\"" << kMarginTop + plot_h / 2
      << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 15 "
      << kMarginTop + plot_h / 2 << ")\">" << svg_escape(y_label)
      << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fy = ymax * i / 4.0;
    const double y = kMarginTop + plot_h - fy / ymax * plot_h;
    out << "<text x=\"" << kMarginLeft - 6 << "\" y=\"" << y + 4
        << "\" text-anchor=\"end\" font-size=\"11\">" << fmt_tick(fy)
        << "</text>\n";
  }
  const double slot = plot_w / std::max<std::size_t>(1, bars.size());
  int color = 0;
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double h = bars[i].second / ymax * plot_h;
    const double x = kMarginLeft + slot * i + slot * 0.2;
    out << "<rect x=\"" << x << "\" y=\"" << kMarginTop + plot_h - h
        << "\" width=\"" << slot * 0.6 << "\" height=\"" << h << "\" fill=\""
        << kPalette[color % 6] << "\"/>\n";
    out << "<text x=\"" << x + slot * 0.3 << "\" y=\""
        << kMarginTop + plot_h + 18 << "\" text-anchor=\"middle\" "
        << "font-size=\"11\">" << svg_escape(bars[i].first) << "</text>\n";
    out << "<text x=\"" << x + slot * 0.3 << "\" y=\""
        << kMarginTop + plot_h - h - 5 << "\" text-anchor=\"middle\" "
        << "font-size=\"11\">" << fmt_tick(bars[i].second) << "</text>\n";
    ++color;
  }
  out << "</svg>\n";
  return out.str();
}

void write_report_plots(const RunReport& report,
                        const std::filesystem::path& out_dir) {
  std::vector<Series> metric_series;
  Series rank1{"Rank-1", {}, {}}, map{"mAP", {}, {}}, f1{"pairwise F1", {}, {}};
  Series clusters{"clusters", {}, {}};
  for (const IterationRow& r : report.rows) {
    const double it = r.iteration;
    if (r.rank1) {
      rank1.x.push_back(it);
      rank1.y.push_back(*r.rank1);
    }
    if (r.map) {
      map.x.push_back(it);
      map.y.push_back(*r.map);
    }
    if (r.pair_f1) {
      f1.x.push_back(it);
      f1.y.push_back(*r.pair_f1);
    }
    clusters.x.push_back(it);
    clusters.y.push_back(r.clusters);
  }
  for (Series* s : {&rank1, &map, &f1}) {
    if (!s->x.empty()) {
      metric_series.push_back(*s);
    }
  }
  if (!metric_series.empty()) {
    atomic_write_file(out_dir / "trajectory.svg",
                      line_chart_svg("Metrics across clustering iterations",
                                     "iteration", "score", metric_series));
  }
  atomic_write_file(out_dir / "clusters.svg",
                    line_chart_svg("Cluster count across iterations",
                                   "iteration", "clusters", {clusters}));
  const IterationRow* last = report.rows.empty() ? nullptr : &report.rows.back();
  if (last && last->noise_pct) {
    std::vector<std::pair<std::string, double>> bars;
    if (last->hard_pct) {
      bars.emplace_back("hard", *last->hard_pct);
    }
    bars.emplace_back("noise (trimmed)", *last->noise_pct);
    atomic_write_file(out_dir / "node_percentages.svg",
                      bar_chart_svg("Hard and noise node percentages",
                                    "% of nodes", bars));
  }
}

void write_run_outputs(const RunReport& report, const EmbeddingModel* model,
                       const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  atomic_write_file(out_dir / "report.csv", report_csv(report));
  atomic_write_file(out_dir / "config.json", report.config.to_json().dump(2) + "\n");
  nlohmann::ordered_json meta;
  meta["seed"] = report.config.seed;
  meta["wall_seconds"] = report.wall_seconds;
  meta["rows"] = report.rows.size();
  meta["tracklets"] = report.tracklet_ids.size();
  atomic_write_file(out_dir / "meta.json", meta.dump(2) + "\n");
  atomic_write_file(out_dir / "labels.tsv", labels_tsv(report));
  atomic_write_file(out_dir / "merge_log.csv", merge_log_csv(report));
  if (model != nullptr) {
    const std::filesystem::path tmp = out_dir / "model.txt.tmp";
    save_model(*model, tmp.string());
    std::filesystem::rename(tmp, out_dir / "model.txt");
  }
  write_report_plots(report, out_dir);
}

}  // namespace nhac

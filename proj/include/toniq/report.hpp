#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numbers>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "toniq/errors.hpp"
#include "toniq/scoring.hpp"
#include "toniq/serialize.hpp"

namespace toniq {

// Charts over a results directory. Output is a pure function of the input
// files: paths are visited in sorted order and numbers use fixed precision.

inline constexpr std::size_t kHeatmapBins = 20;

inline std::string fixed(double v, int precision = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  std::string s = buf;
  // Print negative zero as "0.000".
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

/// Fraction of accuracies per bin of [0, 1]; each row sums to 1.
inline std::vector<double> accuracy_histogram(const std::vector<double>& values,
                                              std::size_t bins = kHeatmapBins) {
  if (values.empty()) throw ValidationError("histogram of zero accuracies");
  std::vector<double> row(bins, 0.0);
  for (double x : values) {
    check_accuracy(x);
    row[std::min(static_cast<std::size_t>(x * static_cast<double>(bins)), bins - 1)] += 1.0;
  }
  for (double& v : row) v /= static_cast<double>(values.size());
  return row;
}

struct ScoreRow {
  std::string backend_name;
  std::string instance_id;
  std::size_t n_layers = 0;
  double h_score = 0.0;
  std::size_t m_used = 0;
};

namespace svg {

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                                 "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};
  return colors[i % 10];
}

inline std::string header(double w, double h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(w, 0) + "\" height=\"" +
         fixed(h, 0) + "\" viewBox=\"0 0 " + fixed(w, 0) + " " + fixed(h, 0) +
         "\" font-family=\"sans-serif\" font-size=\"11\">\n"
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

inline std::string text(double x, double y, const std::string& s, const char* anchor = "middle",
                        const std::string& extra = "") {
  return "<text x=\"" + fixed(x, 2) + "\" y=\"" + fixed(y, 2) + "\" text-anchor=\"" + anchor + "\"" +
         extra + ">" + xml_escape(s) + "</text>\n";
}

inline std::string rect(double x, double y, double w, double h, const std::string& fill,
                        const std::string& extra = "") {
  return "<rect x=\"" + fixed(x, 2) + "\" y=\"" + fixed(y, 2) + "\" width=\"" + fixed(w, 2) +
         "\" height=\"" + fixed(h, 2) + "\" fill=\"" + fill + "\"" + extra + "/>\n";
}

/// Rect with a hover tooltip.
inline std::string titled_rect(double x, double y, double w, double h, const std::string& fill,
                               const std::string& title) {
  auto r = rect(x, y, w, h, fill);
  r.resize(r.size() - 3);  // drop "/>\n"
  return r + "><title>" + xml_escape(title) + "</title></rect>\n";
}

inline std::string line(double x1, double y1, double x2, double y2, const std::string& stroke,
                        const std::string& extra = "") {
  return "<line x1=\"" + fixed(x1, 2) + "\" y1=\"" + fixed(y1, 2) + "\" x2=\"" + fixed(x2, 2) +
         "\" y2=\"" + fixed(y2, 2) + "\" stroke=\"" + stroke + "\"" + extra + "/>\n";
}

}  // namespace svg

/// Grouped bars of H-Score per backend, one bar per layer count. Groups are
/// ordered by their 1-layer score (descending, ties by name).
inline std::string bar_chart_svg(const std::vector<ScoreRow>& rows, const std::string& title) {
  std::map<std::string, std::map<std::size_t, double>> by_backend;
  std::set<std::size_t> layers;
  for (const auto& r : rows) {
    by_backend[r.backend_name][r.n_layers] = r.h_score;
    layers.insert(r.n_layers);
  }
  std::vector<std::string> order;
  for (const auto& [name, _] : by_backend) order.push_back(name);
  auto first_score = [&](const std::string& name) {
    const auto& m = by_backend.at(name);
    const auto it = m.find(1);
    return it != m.end() ? it->second : -1.0;
  };
  std::stable_sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
    return first_score(a) > first_score(b);
  });

  const std::vector<std::size_t> layer_list(layers.begin(), layers.end());
  const double bar_w = 14.0, gap = 18.0, left = 50.0, top = 40.0, plot_h = 240.0;
  const double group_w = bar_w * static_cast<double>(layer_list.size()) + gap;
  const double width = left + group_w * static_cast<double>(order.size()) + 120.0;
  const double height = top + plot_h + 90.0;
  auto y_of = [&](double h) { return top + plot_h * (1.0 - h / 2.0); };

  std::string s = svg::header(width, height);
  s += svg::text(width / 2.0, 20.0, title, "middle", " font-size=\"14\"");
  for (int t = 0; t <= 4; ++t) {
    const double h = 0.5 * t;
    s += svg::line(left, y_of(h), width - 120.0, y_of(h), "#dddddd");
    s += svg::text(left - 6.0, y_of(h) + 4.0, fixed(h, 1), "end");
  }
  s += svg::line(left, y_of(1.0), width - 120.0, y_of(1.0), "#555555", " stroke-dasharray=\"4 3\"");
  for (std::size_t g = 0; g < order.size(); ++g) {
    const double x0 = left + gap / 2.0 + group_w * static_cast<double>(g);
    const auto& scores = by_backend.at(order[g]);
    for (std::size_t l = 0; l < layer_list.size(); ++l) {
      const auto it = scores.find(layer_list[l]);
      if (it == scores.end()) continue;
      const double h = std::clamp(it->second, 0.0, 2.0);
      s += svg::titled_rect(x0 + bar_w * static_cast<double>(l), y_of(h), bar_w - 1.0,
                            y_of(0.0) - y_of(h), svg::palette(l),
                            order[g] + " p=" + std::to_string(layer_list[l]) + ": " + fixed(it->second, 4));
    }
    const double cx = x0 + bar_w * static_cast<double>(layer_list.size()) / 2.0;
    s += svg::text(cx, y_of(0.0) + 14.0, order[g], "end",
                   " transform=\"rotate(-35 " + fixed(cx, 2) + " " + fixed(y_of(0.0) + 14.0, 2) + ")\"");
  }
  for (std::size_t l = 0; l < layer_list.size(); ++l) {
    const double y = top + 16.0 * static_cast<double>(l);
    s += svg::rect(width - 110.0, y, 10.0, 10.0, svg::palette(l));
    s += svg::text(width - 95.0, y + 9.0, "n_layers=" + std::to_string(layer_list[l]), "start");
  }
  s += svg::text(14.0, top + plot_h / 2.0, "H-Score", "middle",
                 " transform=\"rotate(-90 14 " + fixed(top + plot_h / 2.0, 2) + ")\"");
  s += "</svg>\n";
  return s;
}

/// Rows are layer counts, columns accuracy bins; cell shade is the fraction
/// of runs in the bin.
inline std::string heatmap_svg(const std::vector<std::size_t>& layers,
                               const std::vector<std::vector<double>>& rows, const std::string& title) {
  const std::size_t bins = rows.empty() ? kHeatmapBins : rows.front().size();
  const double cell_w = 24.0, cell_h = 22.0, left = 70.0, top = 40.0;
  const double width = left + cell_w * static_cast<double>(bins) + 30.0;
  const double height = top + cell_h * static_cast<double>(rows.size()) + 50.0;
  double peak = 0.0;
  for (const auto& r : rows)
    for (double v : r) peak = std::max(peak, v);
  std::string s = svg::header(width, height);
  s += svg::text(width / 2.0, 20.0, title, "middle", " font-size=\"14\"");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double y = top + cell_h * static_cast<double>(i);
    s += svg::text(left - 6.0, y + cell_h / 2.0 + 4.0, "p=" + std::to_string(layers[i]), "end");
    for (std::size_t k = 0; k < bins; ++k) {
      const double v = peak > 0.0 ? rows[i][k] / peak : 0.0;
      const int shade = static_cast<int>(std::lround(255.0 * (1.0 - v)));
      char fill[16];
      std::snprintf(fill, sizeof fill, "#%02x%02xff", shade, shade);
      s += svg::titled_rect(left + cell_w * static_cast<double>(k), y, cell_w, cell_h, fill,
                            fixed(rows[i][k], 4));
    }
  }
  const double base = top + cell_h * static_cast<double>(rows.size());
  for (std::size_t k = 0; k <= bins; k += 5) {
    s += svg::text(left + cell_w * static_cast<double>(k), base + 14.0,
                   fixed(static_cast<double>(k) / static_cast<double>(bins), 2));
  }
  s += svg::text(left + cell_w * static_cast<double>(bins) / 2.0, base + 32.0, "accuracy");
  s += "</svg>\n";
  return s;
}

/// Histogram of repeated H-Scores with the fitted normal density overlaid.
inline std::string histogram_svg(const std::vector<double>& scores, double mean, double sd,
                                 const std::string& title, std::size_t bins = 20) {
  if (scores.empty()) throw ValidationError("histogram of zero scores");
  double lo = *std::min_element(scores.begin(), scores.end());
  double hi = *std::max_element(scores.begin(), scores.end());
  if (sd > 0.0) {
    lo = std::min(lo, mean - 4.0 * sd);
    hi = std::max(hi, mean + 4.0 * sd);
  }
  if (!(hi > lo)) {
    lo -= 0.01;
    hi += 0.01;
  }
  const double bw = (hi - lo) / static_cast<double>(bins);
  std::vector<double> density(bins, 0.0);
  for (double x : scores) {
    const auto k = std::min(static_cast<std::size_t>((x - lo) / bw), bins - 1);
    density[k] += 1.0 / (static_cast<double>(scores.size()) * bw);
  }
  double peak = *std::max_element(density.begin(), density.end());
  if (sd > 0.0) peak = std::max(peak, 1.0 / (sd * std::sqrt(2.0 * std::numbers::pi)));

  const double left = 50.0, top = 40.0, plot_w = 400.0, plot_h = 220.0;
  auto x_of = [&](double x) { return left + plot_w * (x - lo) / (hi - lo); };
  auto y_of = [&](double d) { return top + plot_h * (1.0 - d / peak); };
  std::string s = svg::header(left + plot_w + 20.0, top + plot_h + 50.0);
  s += svg::text(left + plot_w / 2.0, 20.0, title, "middle", " font-size=\"14\"");
  for (std::size_t k = 0; k < bins; ++k) {
    const double x = lo + bw * static_cast<double>(k);
    s += svg::rect(x_of(x), y_of(density[k]), x_of(x + bw) - x_of(x), y_of(0.0) - y_of(density[k]),
                   "#9ecae1", " stroke=\"white\"");
  }
  if (sd > 0.0) {
    std::string pts;
    for (int i = 0; i <= 200; ++i) {
      const double x = lo + (hi - lo) * i / 200.0;
      const double z = (x - mean) / sd;
      const double d = std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
      pts += fixed(x_of(x), 2) + "," + fixed(y_of(d), 2) + " ";
    }
    pts.pop_back();
    s += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\"/>\n";
  }
  s += svg::line(left, y_of(0.0), left + plot_w, y_of(0.0), "black");
  for (int t = 0; t <= 4; ++t) {
    const double x = lo + (hi - lo) * t / 4.0;
    s += svg::text(x_of(x), y_of(0.0) + 14.0, fixed(x, 4));
  }
  s += svg::text(left + plot_w / 2.0, y_of(0.0) + 32.0,
                 "H-Score (mean " + fixed(mean, 4) + ", std " + fixed(sd, 4) + ")");
  s += "</svg>\n";
  return s;
}

/// Report files keyed by name, relative to the report directory.
using ReportFiles = std::map<std::string, std::string>;

inline std::string safe_name(std::string s) {
  for (char& c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
  }
  return s;
}

/// Reads every result JSON under `dir` (skipping `skip`) and renders the
/// charts. Throws ValidationError when there is nothing to report.
inline ReportFiles build_report(const std::filesystem::path& dir, const std::filesystem::path& skip = {}) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError("results directory " + dir.string() + " does not exist");
  std::vector<fs::path> files;
  for (auto it = fs::recursive_directory_iterator(dir); it != fs::recursive_directory_iterator(); ++it) {
    if (!skip.empty() && it->is_directory() && fs::equivalent(it->path(), skip)) {
      it.disable_recursion_pending();
      continue;
    }
    if (it->is_regular_file() && it->path().extension() == ".json") files.push_back(it->path());
  }
  std::sort(files.begin(), files.end());

  std::vector<ScoreRow> scores;
  // (backend, instance) -> layers -> accuracies
  std::map<std::pair<std::string, std::string>, std::map<std::size_t, std::vector<double>>> samples;
  std::vector<std::pair<std::string, RepeatStats>> robust;
  for (const auto& f : files) {
    const auto j = read_json(f);
    if (!j.is_object() || !j.contains("kind")) continue;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "score_report") {
      const auto r = report_from_json(j);
      scores.push_back({r.backend_name, r.instance_id, r.n_layers, r.h_score, r.m_used});
    } else if (kind == "samples") {
      const auto s = samples_from_json(j);
      auto& v = samples[{s.backend_name, s.instance_id}][s.n_layers];
      v.insert(v.end(), s.values.begin(), s.values.end());
    } else if (kind == "robustness_report") {
      const auto r = report_from_json(j);
      if (r.repeat_stats) {
        robust.emplace_back(r.backend_name + " " + r.instance_id + " p=" + std::to_string(r.n_layers),
                            *r.repeat_stats);
      }
    }
  }
  if (scores.empty() && samples.empty() && robust.empty()) {
    throw ValidationError("nothing to report in " + dir.string());
  }

  ReportFiles out;
  if (!scores.empty()) {
    std::sort(scores.begin(), scores.end(), [](const ScoreRow& a, const ScoreRow& b) {
      return std::tie(a.instance_id, a.backend_name, a.n_layers) <
             std::tie(b.instance_id, b.backend_name, b.n_layers);
    });
    std::string csv = "instance_id,backend,n_layers,h_score,M_used\n";
    std::map<std::string, std::vector<ScoreRow>> by_instance;
    for (const auto& r : scores) {
      csv += r.instance_id + "," + r.backend_name + "," + std::to_string(r.n_layers) + "," +
             fixed(r.h_score, 6) + "," + std::to_string(r.m_used) + "\n";
      by_instance[r.instance_id].push_back(r);
    }
    out["h_scores.csv"] = csv;
    for (const auto& [inst, rows] : by_instance) {
      out["h_scores_" + safe_name(inst) + ".svg"] = bar_chart_svg(rows, "H-Score by backend, " + inst);
    }
  }
  for (const auto& [key, per_layer] : samples) {
    std::vector<std::size_t> layers;
    std::vector<std::vector<double>> rows;
    std::string csv = "n_layers";
    for (std::size_t k = 0; k < kHeatmapBins; ++k) {
      csv += ",bin_" + fixed(static_cast<double>(k) / kHeatmapBins, 2);
    }
    csv += "\n";
    for (const auto& [l, values] : per_layer) {
      layers.push_back(l);
      rows.push_back(accuracy_histogram(values));
      csv += std::to_string(l);
      for (double v : rows.back()) csv += "," + fixed(v, 6);
      csv += "\n";
    }
    const auto stem = "accuracy_" + safe_name(key.first) + "_" + safe_name(key.second);
    out[stem + ".csv"] = csv;
    out[stem + ".svg"] = heatmap_svg(layers, rows, "Accuracy distribution, " + key.first + ", " + key.second);
  }
  for (const auto& [label, st] : robust) {
    const auto stem = "robustness_" + safe_name(label);
    out[stem + ".svg"] = histogram_svg(st.scores, st.mean, st.std, "H-Score repeats, " + label);
    std::string csv = "repeat,h_score\n";
    for (std::size_t i = 0; i < st.scores.size(); ++i) csv += std::to_string(i) + "," + fixed(st.scores[i], 6) + "\n";
    out[stem + ".csv"] = csv;
  }
  return out;
}

}  // namespace toniq

/*
 * Copyright 2026 The BACON Calibration Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "bacon/report.h"

#include <algorithm>
#include <array>
#include <cstdio>

#include "bacon/csv_io.h"
#include "bacon/errors.h"
#include "bacon/serialization.h"

namespace bacon {
namespace {

constexpr std::array<const char*, 10> kPalette = {
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string escape(std::string_view text) {
  std::string out;
  for (char c : text) {
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

std::string opt(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

// A plotting panel mapping data coordinates to pixels.
struct Panel {
  double left, top, width, height;
  double x_max = 1.0;
  double y_max = 1.0;

  double x(double v) const { return left + width * v / x_max; }
  double y(double v) const { return top + height * (1.0 - v / y_max); }
};

class Svg {
 public:
  Svg(double width, double height, std::string_view title) {
    out_ = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + px(width) +
           "\" height=\"" + px(height) + "\" viewBox=\"0 0 " + px(width) +
           " " + px(height) + "\">\n";
    out_ += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out_ += "<text x=\"" + px(width / 2) +
            "\" y=\"20.00\" text-anchor=\"middle\" font-size=\"14\">" +
            escape(title) + "</text>\n";
  }

  void axes(const Panel& p, std::string_view x_label,
            std::string_view y_label) {
    out_ += "<rect x=\"" + px(p.left) + "\" y=\"" + px(p.top) +
            "\" width=\"" + px(p.width) + "\" height=\"" + px(p.height) +
            "\" fill=\"none\" stroke=\"black\"/>\n";
    out_ += "<text x=\"" + px(p.left + p.width / 2) + "\" y=\"" +
            px(p.top + p.height + 28) +
            "\" text-anchor=\"middle\" font-size=\"12\">" + escape(x_label) +
            "</text>\n";
    out_ += "<text x=\"" + px(p.left - 30) + "\" y=\"" +
            px(p.top + p.height / 2) +
            "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 " +
            px(p.left - 30) + " " + px(p.top + p.height / 2) + ")\">" +
            escape(y_label) + "</text>\n";
  }

  void identity(const Panel& p) {
    out_ += "<line class=\"identity\" x1=\"" + px(p.x(0)) + "\" y1=\"" +
            px(p.y(0)) + "\" x2=\"" + px(p.x(1)) + "\" y2=\"" + px(p.y(1)) +
            "\" stroke=\"red\" stroke-dasharray=\"4 3\"/>\n";
  }

  void raw(const std::string& s) { out_ += s; }

  std::string finish() { return out_ + "</svg>\n"; }

 private:
  std::string out_;
};

std::string data_attr(std::string_view name, const std::string& value) {
  return " data-" + std::string(name) + "=\"" + value + "\"";
}

std::string circle(double cx, double cy, const char* color,
                   const std::string& attrs) {
  return "<circle cx=\"" + px(cx) + "\" cy=\"" + px(cy) +
         "\" r=\"4.00\" fill=\"" + color + "\"" + attrs + "/>\n";
}

std::string legend(double x, double y, std::size_t index,
                   std::string_view label) {
  const char* color = kPalette[index % kPalette.size()];
  return "<rect x=\"" + px(x) + "\" y=\"" + px(y - 9) +
         "\" width=\"10.00\" height=\"10.00\" fill=\"" + color +
         "\"/>\n<text x=\"" + px(x + 14) + "\" y=\"" + px(y) +
         "\" font-size=\"11\">" + escape(label) + "</text>\n";
}

double nice_max(double v) { return v > 0.0 ? v * 1.1 : 1.0; }

}  // namespace

std::string_view plot_kind_name(PlotKind kind) {
  switch (kind) {
    case PlotKind::kFixedReliability: return "fixed-reliability";
    case PlotKind::kAdaptiveReliability: return "adaptive-reliability";
    case PlotKind::kCIWhisker: return "ci-whisker";
    case PlotKind::kClassScatter: return "class-scatter";
    case PlotKind::kMceScatter: return "mce-scatter";
  }
  return "?";
}

PlotKind parse_plot_kind(std::string_view name) {
  for (PlotKind k :
       {PlotKind::kFixedReliability, PlotKind::kAdaptiveReliability,
        PlotKind::kCIWhisker, PlotKind::kClassScatter, PlotKind::kMceScatter}) {
    if (plot_kind_name(k) == name) return k;
  }
  throw ConfigError("unknown plot kind '" + std::string(name) + "'");
}

Rendered render_fixed_reliability(const CalibrationReport& report,
                                  std::string_view title) {
  const auto& b = report.fixed;
  Rendered out;
  out.csv = "bin,lo,hi,count,confidence,accuracy\n";

  Svg svg(520, 620, title);
  const Panel upper{70, 40, 400, 360};
  std::size_t max_count = 1;
  for (auto c : b.counts) max_count = std::max(max_count, c);
  Panel lower{70, 460, 400, 110};
  lower.y_max = static_cast<double>(max_count);

  svg.axes(upper, "confidence", "accuracy");
  svg.identity(upper);
  svg.axes(lower, "confidence", "frequency");

  for (std::size_t m = 0; m < b.num_bins; ++m) {
    const std::string lo = format_double(b.edges[m]);
    const std::string hi = format_double(b.edges[m + 1]);
    const std::string count = std::to_string(b.counts[m]);
    out.csv += std::to_string(m) + "," + lo + "," + hi + "," + count + "," +
               opt(b.confidence[m]) + "," + opt(b.accuracy[m]) + "\n";
    if (b.counts[m] == 0) continue;

    const std::string attrs = data_attr("bin", std::to_string(m)) +
                              data_attr("count", count) +
                              data_attr("confidence", opt(b.confidence[m])) +
                              data_attr("accuracy", opt(b.accuracy[m]));
    const double x0 = upper.x(b.edges[m]);
    const double x1 = upper.x(b.edges[m + 1]);
    const double acc_y = upper.y(*b.accuracy[m]);
    svg.raw("<rect class=\"accuracy\" x=\"" + px(x0) + "\" y=\"" + px(acc_y) +
            "\" width=\"" + px(x1 - x0) + "\" height=\"" +
            px(upper.y(0) - acc_y) +
            "\" fill=\"#1f77b4\" fill-opacity=\"0.8\" stroke=\"white\"" +
            attrs + "/>\n");
    svg.raw(circle(upper.x(*b.confidence[m]), acc_y, "#d62728",
                   " class=\"confidence\"" + attrs));

    const double h_y = lower.y(static_cast<double>(b.counts[m]));
    svg.raw("<rect class=\"frequency\" x=\"" + px(x0) + "\" y=\"" + px(h_y) +
            "\" width=\"" + px(x1 - x0) + "\" height=\"" +
            px(lower.y(0) - h_y) + "\" fill=\"#7f7f7f\" stroke=\"white\"" +
            data_attr("bin", std::to_string(m)) + data_attr("count", count) +
            "/>\n");
  }
  out.svg = svg.finish();
  return out;
}

Rendered render_adaptive_reliability(const CalibrationReport& report,
                                     std::string_view title,
                                     std::optional<int> class_filter) {
  const auto& b = report.adaptive;
  Rendered out;
  out.csv = "class,range,count,confidence,accuracy\n";
  Svg svg(560, 480, title);
  const Panel panel{70, 40, 380, 380};
  svg.axes(panel, "confidence", "accuracy");
  svg.identity(panel);

  std::size_t series = 0;
  for (std::size_t k = 0; k < b.ranges.size(); ++k) {
    if (class_filter && static_cast<std::size_t>(*class_filter) != k) continue;
    const char* color = kPalette[k % kPalette.size()];
    svg.raw(legend(465, 50 + 16.0 * static_cast<double>(series++), k,
                   "class " + std::to_string(k)));
    for (std::size_t r = 0; r < b.ranges[k].size(); ++r) {
      const auto& range = b.ranges[k][r];
      if (range.count == 0) continue;
      const std::string conf = format_double(range.confidence);
      const std::string acc = format_double(range.accuracy);
      const std::string count = std::to_string(range.count);
      out.csv += std::to_string(k) + "," + std::to_string(r) + "," + count +
                 "," + conf + "," + acc + "\n";
      svg.raw(circle(panel.x(range.confidence), panel.y(range.accuracy), color,
                     data_attr("class", std::to_string(k)) +
                         data_attr("range", std::to_string(r)) +
                         data_attr("count", count) +
                         data_attr("confidence", conf) +
                         data_attr("accuracy", acc)));
    }
  }
  out.svg = svg.finish();
  return out;
}

Rendered render_ci_whisker(const AggregateResult& result,
                           std::string_view title) {
  Rendered out;
  out.csv = "estimator,metric,mean,two_sigma,lower,upper\n";
  struct Item {
    std::string estimator, metric, mean, two_sigma, lower, upper;
    double m, lo, hi;
  };
  std::vector<Item> items;
  double y_max = 0.0;
  for (const auto& [tag, agg] : result.estimators) {
    const std::pair<const char*, const MetricSummary*> metrics[] = {
        {"ece", &agg.ece}, {"ace", &agg.ace}, {"mce", &agg.mce}};
    for (const auto& [name, s] : metrics) {
      Item it;
      it.estimator = std::string(estimator_name(tag));
      it.metric = name;
      it.m = s->mean;
      const double spread = s->two_sigma.value_or(0.0);
      it.lo = s->mean - spread;
      it.hi = s->mean + spread;
      it.mean = format_double(s->mean);
      it.two_sigma = s->two_sigma ? format_double(*s->two_sigma) : "";
      it.lower = format_double(it.lo);
      it.upper = format_double(it.hi);
      y_max = std::max(y_max, it.hi);
      out.csv += it.estimator + "," + it.metric + "," + it.mean + "," +
                 it.two_sigma + "," + it.lower + "," + it.upper + "\n";
      items.push_back(std::move(it));
    }
  }

  Svg svg(640, 440, title);
  Panel panel{70, 40, 520, 330};
  panel.x_max = static_cast<double>(std::max<std::size_t>(items.size(), 1));
  panel.y_max = nice_max(y_max);
  svg.axes(panel, "estimator / metric", "calibration error");
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& it = items[i];
    const double cx = panel.x(static_cast<double>(i) + 0.5);
    const std::string attrs =
        data_attr("estimator", it.estimator) + data_attr("metric", it.metric) +
        data_attr("mean", it.mean) + data_attr("lower", it.lower) +
        data_attr("upper", it.upper);
    svg.raw("<line class=\"whisker\" x1=\"" + px(cx) + "\" y1=\"" +
            px(panel.y(std::max(it.lo, 0.0))) + "\" x2=\"" + px(cx) +
            "\" y2=\"" + px(panel.y(it.hi)) + "\" stroke=\"black\"" + attrs +
            "/>\n");
    svg.raw(circle(cx, panel.y(it.m), kPalette[(i / 3) % kPalette.size()],
                   attrs));
    svg.raw("<text x=\"" + px(cx) + "\" y=\"" + px(panel.y(0) + 14) +
            "\" text-anchor=\"middle\" font-size=\"9\">" + escape(it.metric) +
            "</text>\n");
  }
  std::size_t series = 0;
  for (const auto& [tag, agg] : result.estimators) {
    svg.raw(legend(80 + 130.0 * static_cast<double>(series), 425, series,
                   estimator_name(tag)));
    ++series;
  }
  out.svg = svg.finish();
  return out;
}

Rendered render_class_scatter(std::span<const CalibrationReport> reports,
                              std::string_view title) {
  Rendered out;
  out.csv = "estimator,class,accuracy,ece,ace\n";
  double y_max = 0.0;
  for (const auto& r : reports) {
    for (const auto& c : r.per_class.classes) {
      y_max = std::max({y_max, c.ece, c.ace});
    }
  }
  Svg svg(600, 480, title);
  Panel panel{70, 40, 400, 380};
  panel.y_max = nice_max(y_max);
  svg.axes(panel, "class accuracy", "class calibration error");
  for (std::size_t s = 0; s < reports.size(); ++s) {
    const auto& r = reports[s];
    const std::string est(estimator_name(r.estimator));
    const char* color = kPalette[s % kPalette.size()];
    svg.raw(legend(485, 50 + 16.0 * static_cast<double>(s), s, est));
    for (const auto& c : r.per_class.classes) {
      const std::string acc = format_double(c.accuracy);
      const std::string e = format_double(c.ece);
      const std::string a = format_double(c.ace);
      out.csv += est + "," + std::to_string(c.class_index) + "," + acc + "," +
                 e + "," + a + "\n";
      const std::string base = data_attr("estimator", est) +
                               data_attr("class", std::to_string(c.class_index)) +
                               data_attr("accuracy", acc);
      svg.raw(circle(panel.x(c.accuracy), panel.y(c.ece), color,
                     " class=\"ece\"" + base + data_attr("ece", e)));
      svg.raw("<rect class=\"ace\" x=\"" + px(panel.x(c.accuracy) - 3) +
              "\" y=\"" + px(panel.y(c.ace) - 3) +
              "\" width=\"6.00\" height=\"6.00\" fill=\"none\" stroke=\"" +
              color + "\"" + base + data_attr("ace", a) + "/>\n");
    }
  }
  out.svg = svg.finish();
  return out;
}

std::vector<McePoint> mce_points(std::span<const SeedRun> runs) {
  std::vector<McePoint> out;
  for (const auto& r : runs) {
    if (!r.ok) continue;
    for (const auto& [tag, rep] : r.reports) {
      out.push_back({r.seed, tag, rep.mce_bin_frequency, rep.mce});
    }
  }
  return out;
}

std::vector<McePoint> mce_points(const AggregateResult& result) {
  std::vector<McePoint> out;
  for (const auto& [tag, agg] : result.estimators) {
    for (std::size_t i = 0; i < agg.mce.values.size(); ++i) {
      out.push_back({i < result.seeds.size() ? result.seeds[i] : i, tag,
                     agg.mce_bin_frequency.at(i), agg.mce.values[i]});
    }
  }
  return out;
}

Rendered render_mce_scatter(std::span<const McePoint> points,
                            std::string_view title) {
  Rendered out;
  out.csv = "seed,estimator,bin_frequency,mce\n";
  double x_max = 0.0;
  double y_max = 0.0;
  std::vector<EstimatorTag> present;
  for (const auto& p : points) {
    x_max = std::max(x_max, static_cast<double>(p.bin_frequency));
    y_max = std::max(y_max, p.mce);
    if (std::find(present.begin(), present.end(), p.estimator) ==
        present.end()) {
      present.push_back(p.estimator);
    }
  }
  std::sort(present.begin(), present.end());

  Svg svg(600, 480, title);
  Panel panel{70, 40, 400, 380};
  panel.x_max = nice_max(x_max);
  panel.y_max = nice_max(y_max);
  svg.axes(panel, "MCE bin frequency", "MCE");
  for (std::size_t s = 0; s < present.size(); ++s) {
    svg.raw(legend(485, 50 + 16.0 * static_cast<double>(s), s,
                   estimator_name(present[s])));
  }
  for (const auto& p : points) {
    const auto series = static_cast<std::size_t>(
        std::find(present.begin(), present.end(), p.estimator) -
        present.begin());
    const std::string est(estimator_name(p.estimator));
    const std::string freq = std::to_string(p.bin_frequency);
    const std::string mce = format_double(p.mce);
    out.csv += std::to_string(p.seed) + "," + est + "," + freq + "," + mce +
               "\n";
    svg.raw(circle(panel.x(static_cast<double>(p.bin_frequency)),
                   panel.y(p.mce), kPalette[series % kPalette.size()],
                   data_attr("seed", std::to_string(p.seed)) +
                       data_attr("estimator", est) +
                       data_attr("bin_frequency", freq) +
                       data_attr("mce", mce)));
  }
  out.svg = svg.finish();
  return out;
}

void write_plot(const Rendered& plot, const std::filesystem::path& svg_path) {
  write_text_file(svg_path, plot.svg);
  auto csv_path = svg_path;
  csv_path.replace_extension(".csv");
  write_text_file(csv_path, plot.csv);
}

}  // namespace bacon

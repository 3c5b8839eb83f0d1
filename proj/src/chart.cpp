#include "shardgame/chart.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace shardgame {

namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 400;
constexpr double kLeft = 70;
constexpr double kRight = 20;
constexpr double kTop = 40;
constexpr double kBottom = 60;

struct Series {
  std::string label;
  std::string color;
  std::vector<double> y;
};

// Roughly five round-numbered ticks spanning [lo, hi].
std::vector<double> ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag) {
      step = m * mag;
      break;
    }
  }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + step * 1e-9; t += step) out.push_back(t);
  return out;
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_svg(const std::vector<CsvRow>& rows, ChartKind kind, std::string_view title) {
  std::vector<double> xs;
  for (const auto& r : rows) xs.push_back(r.sweep_value);

  std::vector<Series> series;
  std::string y_label;
  if (kind == ChartKind::Ratio) {
    Series coop{"cooperative", "#1f77b4", {}};
    Series defect{"defective", "#d62728", {}};
    for (const auto& r : rows) {
      coop.y.push_back(r.mean_coop_ratio);
      defect.y.push_back(r.mean_defect_ratio);
    }
    series = {coop, defect};
    y_label = "ratio of processors";
  } else {
    Series util{"weighted mean utility", "#2ca02c", {}};
    for (const auto& r : rows) util.y.push_back(r.weighted_mean_util);
    series = {util};
    y_label = "utility";
  }

  double x_lo = xs.empty() ? 0.0 : xs.front();
  double x_hi = xs.empty() ? 1.0 : xs.back();
  if (x_hi <= x_lo) x_hi = x_lo + 1.0;
  double y_lo = 0.0;
  double y_hi = 1.0;
  if (kind == ChartKind::Utility) {
    y_lo = 0.0;
    y_hi = 0.0;
    bool first = true;
    for (const auto& s : series) {
      for (double v : s.y) {
        y_lo = first ? v : std::min(y_lo, v);
        y_hi = first ? v : std::max(y_hi, v);
        first = false;
      }
    }
    const double pad = std::max(1.0, (y_hi - y_lo) * 0.05);
    y_lo -= pad;
    y_hi += pad;
  }

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x_lo) / (x_hi - x_lo) * plot_w; };
  auto py = [&](double y) { return kTop + (1.0 - (y - y_lo) / (y_hi - y_lo)) * plot_h; };

  std::string svg;
  svg += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n",
      kWidth, kHeight, kWidth, kHeight);
  svg += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", kWidth, kHeight);
  svg += fmt::format("<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n", kWidth / 2,
                     escape(title));

  for (double t : ticks(y_lo, y_hi)) {
    const double y = py(t);
    svg += fmt::format("<line x1=\"{}\" y1=\"{:.2f}\" x2=\"{}\" y2=\"{:.2f}\" stroke=\"#ddd\"/>\n", kLeft, y,
                       kWidth - kRight, y);
    svg += fmt::format("<text x=\"{}\" y=\"{:.2f}\" text-anchor=\"end\">{}</text>\n", kLeft - 6, y + 4, t);
  }
  for (double t : ticks(x_lo, x_hi)) {
    const double x = px(t);
    svg += fmt::format("<line x1=\"{:.2f}\" y1=\"{}\" x2=\"{:.2f}\" y2=\"{}\" stroke=\"#999\"/>\n", x,
                       kHeight - kBottom, x, kHeight - kBottom + 5);
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", x, kHeight - kBottom + 18,
                       t);
  }
  svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", kLeft,
                     kTop, plot_w, plot_h);
  const std::string x_label = rows.empty() ? "sweep value" : rows.front().sweep_variable;
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", kLeft + plot_w / 2, kHeight - 20,
                     escape(x_label));
  svg += fmt::format("<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
                     kTop + plot_h / 2, kTop + plot_h / 2, escape(y_label));

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    std::string points;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i > 0) points += ' ';
      points += fmt::format("{:.2f},{:.2f}", px(xs[i]), py(s.y[i]));
    }
    svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n", s.color, points);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      svg += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2.5\" fill=\"{}\"/>\n", px(xs[i]), py(s.y[i]),
                         s.color);
    }
    const double ly = kTop + 14 + 16 * static_cast<double>(si);
    const double lx = kWidth - kRight - 170;
    svg += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"/>\n", lx, ly - 4,
                       lx + 20, ly - 4, s.color);
    svg += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", lx + 26, ly, escape(s.label));
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace shardgame

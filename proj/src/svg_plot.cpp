#include "transport/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

#include "transport/error.hpp"

namespace transport {

namespace {

struct SeriesPoint {
  double delta;
  double point;
  std::optional<std::pair<double, double>> ci;
};

std::string num(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.6g", v);
  return buffer;
}

// nice round tick step covering the range with ~n ticks
double tick_step(double span, int n) {
  if (span <= 0.0) return 1.0;
  double raw = span / n;
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double mult : {1.0, 2.0, 5.0, 10.0})
    if (raw <= mult * mag) return mult * mag;
  return 10.0 * mag;
}

}  // namespace

std::string sensitivity_curves_svg(const SensitivityGridResult& result,
                                   EstimatorId estimator) {
  // series[u0][arm] in canonical order
  std::vector<double> u0_order;
  std::map<double, std::vector<SeriesPoint>> series[2];
  double y_min = std::numeric_limits<double>::infinity();
  double y_max = -std::numeric_limits<double>::infinity();
  double d_min = y_min, d_max = y_max;

  for (const auto& cell : result.cells) {
    for (const auto& rec : cell.records) {
      if (rec.estimator != estimator || rec.estimand == Estimand::Ate) continue;
      int arm = rec.estimand == Estimand::MeanA1 ? 1 : 0;
      if (!series[arm].count(cell.spec.u0)) {
        if (arm == 1) u0_order.push_back(cell.spec.u0);
      }
      series[arm][cell.spec.u0].push_back({cell.spec.delta, rec.point, rec.ci});
      y_min = std::min(y_min, rec.ci ? rec.ci->first : rec.point);
      y_max = std::max(y_max, rec.ci ? rec.ci->second : rec.point);
      d_min = std::min(d_min, cell.spec.delta);
      d_max = std::max(d_max, cell.spec.delta);
    }
  }
  if (u0_order.empty())
    fail_config("cli", "no cells for estimator " + to_string(estimator) + " to plot");
  if (d_min == d_max) {
    d_min -= 1.0;
    d_max += 1.0;
  }
  double pad = 0.05 * (y_max - y_min + 1e-12);
  y_min -= pad;
  y_max += pad;

  const double panel_w = 260, panel_h = 300;
  const double margin_left = 58, margin_right = 16, margin_top = 46, margin_bottom = 52;
  const double gap = 26;
  const int panels = static_cast<int>(u0_order.size());
  const double width = margin_left + panels * panel_w + (panels - 1) * gap + margin_right;
  const double height = margin_top + panel_h + margin_bottom;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width)
      << "\" height=\"" << num(height) << "\" viewBox=\"0 0 " << num(width) << ' '
      << num(height) << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << num(width / 2) << "\" y=\"20\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"15\">"
      << to_string(estimator) << " potential outcome means</text>\n";

  for (int p = 0; p < panels; ++p) {
    const double u0 = u0_order[static_cast<std::size_t>(p)];
    const double x0 = margin_left + p * (panel_w + gap);
    const double y0 = margin_top;

    auto sx = [&](double d) { return x0 + (d - d_min) / (d_max - d_min) * panel_w; };
    auto sy = [&](double v) { return y0 + (y_max - v) / (y_max - y_min) * panel_h; };

    svg << "<rect x=\"" << num(x0) << "\" y=\"" << num(y0) << "\" width=\"" << num(panel_w)
        << "\" height=\"" << num(panel_h)
        << "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";
    svg << "<text x=\"" << num(x0 + panel_w / 2) << "\" y=\"" << num(y0 - 8)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">u(0) = "
        << num(u0) << "</text>\n";

    // x ticks
    double dstep = tick_step(d_max - d_min, 5);
    for (double t = std::ceil(d_min / dstep) * dstep; t <= d_max + 1e-9; t += dstep) {
      svg << "<line x1=\"" << num(sx(t)) << "\" y1=\"" << num(y0 + panel_h) << "\" x2=\""
          << num(sx(t)) << "\" y2=\"" << num(y0 + panel_h + 5)
          << "\" stroke=\"#444\" stroke-width=\"1\"/>\n";
      svg << "<text x=\"" << num(sx(t)) << "\" y=\"" << num(y0 + panel_h + 18)
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
          << num(t) << "</text>\n";
    }
    // y ticks on the first panel
    if (p == 0) {
      double ystep = tick_step(y_max - y_min, 6);
      for (double t = std::ceil(y_min / ystep) * ystep; t <= y_max + 1e-9; t += ystep) {
        svg << "<line x1=\"" << num(x0 - 5) << "\" y1=\"" << num(sy(t)) << "\" x2=\""
            << num(x0) << "\" y2=\"" << num(sy(t))
            << "\" stroke=\"#444\" stroke-width=\"1\"/>\n";
        svg << "<text x=\"" << num(x0 - 8) << "\" y=\"" << num(sy(t) + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
            << num(t) << "</text>\n";
      }
    }
    svg << "<text x=\"" << num(x0 + panel_w / 2) << "\" y=\"" << num(y0 + panel_h + 38)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
           "delta (outcome units)</text>\n";

    for (int arm : {1, 0}) {
      auto it = series[arm].find(u0);
      if (it == series[arm].end()) continue;
      auto points = it->second;
      std::sort(points.begin(), points.end(),
                [](const SeriesPoint& a, const SeriesPoint& b) { return a.delta < b.delta; });
      const char* dash = arm == 1 ? "" : " stroke-dasharray=\"6,4\"";

      auto polyline = [&](auto value_of, const char* color, double width_px) {
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
            << num(width_px) << "\"" << dash << " points=\"";
        for (const auto& pt : points) svg << num(sx(pt.delta)) << ',' << num(sy(value_of(pt))) << ' ';
        svg << "\"/>\n";
      };

      bool has_ci = std::all_of(points.begin(), points.end(),
                                [](const SeriesPoint& pt) { return pt.ci.has_value(); });
      if (has_ci) {
        polyline([](const SeriesPoint& pt) { return pt.ci->first; }, "#9a9a9a", 1.2);
        polyline([](const SeriesPoint& pt) { return pt.ci->second; }, "#9a9a9a", 1.2);
      }
      polyline([](const SeriesPoint& pt) { return pt.point; }, "black", 1.8);
    }
  }

  // y axis label
  svg << "<text x=\"16\" y=\"" << num(margin_top + panel_h / 2)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
         "transform=\"rotate(-90 16 "
      << num(margin_top + panel_h / 2) << ")\">mean outcome</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace transport

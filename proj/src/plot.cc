#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "noisyal/metrics.h"

namespace noisyal {

namespace {

constexpr double kWidth = 720;
constexpr double kHeight = 440;
constexpr double kLeft = 70;
constexpr double kRight = 170;
constexpr double kTop = 40;
constexpr double kBottom = 50;

constexpr std::array<std::string_view, 8> kPalette = {
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

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

// 1-2-5 step giving roughly `target` ticks over span.
double nice_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag) return m * mag;
  }
  return 10 * mag;
}

}  // namespace

std::string render_svg(const std::vector<Curve>& curves, std::string_view title) {
  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -xmin;
  double ymin = 0.0;
  double ymax = 1.0;
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      xmin = std::min(xmin, c.x[i]);
      xmax = std::max(xmax, c.x[i]);
    }
  }
  if (!std::isfinite(xmin)) {
    xmin = 0;
    xmax = 1;
  }
  xmin = std::min(xmin, 0.0);
  if (xmax <= xmin) xmax = xmin + 1;

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return kTop + (1.0 - (std::clamp(y, ymin, ymax) - ymin) / (ymax - ymin)) * ph; };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" "
      "viewBox=\"0 0 {:.0f} {:.0f}\" font-family=\"sans-serif\" font-size=\"12\">\n",
      kWidth, kHeight, kWidth, kHeight);
  svg += fmt::format("<rect width=\"{:.0f}\" height=\"{:.0f}\" fill=\"white\"/>\n", kWidth, kHeight);
  svg += fmt::format("<text x=\"{:.1f}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
                     kLeft + pw / 2, escape(title));

  const double xstep = nice_step(xmax - xmin, 6);
  for (double t = std::ceil(xmin / xstep) * xstep; t <= xmax + 1e-9; t += xstep) {
    svg += fmt::format(
        "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"#dddddd\"/>\n"
        "<text x=\"{0:.2f}\" y=\"{3:.2f}\" text-anchor=\"middle\">{4:.0f}</text>\n",
        sx(t), kTop, kTop + ph, kTop + ph + 18, t);
  }
  for (int i = 0; i <= 10; i += 2) {
    const double t = i / 10.0;
    svg += fmt::format(
        "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"#dddddd\"/>\n"
        "<text x=\"{3:.2f}\" y=\"{4:.2f}\" text-anchor=\"end\">{5:.1f}</text>\n",
        kLeft, sy(t), kLeft + pw, kLeft - 6, sy(t) + 4, t);
  }
  svg += fmt::format(
      "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"none\" stroke=\"black\"/>\n",
      kLeft, kTop, pw, ph);
  svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">total annotation budget</text>\n",
                     kLeft + pw / 2, kHeight - 10);
  svg += fmt::format(
      "<text x=\"16\" y=\"{:.2f}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2f})\">mAP</text>\n",
      kTop + ph / 2, kTop + ph / 2);

  for (std::size_t ci = 0; ci < curves.size(); ++ci) {
    const auto& c = curves[ci];
    const auto color = kPalette[ci % kPalette.size()];
    if (!c.band.empty() && c.band.size() == c.x.size() && !c.x.empty()) {
      std::string pts;
      for (std::size_t i = 0; i < c.x.size(); ++i) {
        pts += fmt::format("{:.2f},{:.2f} ", sx(c.x[i]), sy(c.y[i] + c.band[i]));
      }
      for (std::size_t i = c.x.size(); i-- > 0;) {
        pts += fmt::format("{:.2f},{:.2f} ", sx(c.x[i]), sy(c.y[i] - c.band[i]));
      }
      pts.pop_back();
      svg += fmt::format("<polygon points=\"{}\" fill=\"{}\" fill-opacity=\"0.2\" stroke=\"none\"/>\n",
                         pts, color);
    }
    if (!c.x.empty()) {
      std::string pts;
      for (std::size_t i = 0; i < c.x.size(); ++i) {
        pts += fmt::format("{:.2f},{:.2f} ", sx(c.x[i]), sy(c.y[i]));
      }
      pts.pop_back();
      svg += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                         pts, color);
    }
    const double ly = kTop + 14 + 20.0 * static_cast<double>(ci);
    svg += fmt::format(
        "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"{3}\" stroke-width=\"2\"/>\n"
        "<text x=\"{4:.2f}\" y=\"{5:.2f}\">{6}</text>\n",
        kLeft + pw + 12, ly, kLeft + pw + 36, color, kLeft + pw + 42, ly + 4, escape(c.label));
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace noisyal

#include "kvsim/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <ostream>

#include <fmt/format.h>

#include "kvsim/errors.hpp"

namespace kvsim {

namespace {

constexpr std::array<const char*, 6> kColors{"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};

std::string escape(const std::string& s) {
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

struct Axis {
  double lo = 0, hi = 1;
  bool log = false;

  double map(double v) const { return log ? std::log10(v) : v; }
  double unit(double v) const { return hi > lo ? (map(v) - lo) / (hi - lo) : 0.5; }
};

bool usable(double v, bool log) { return std::isfinite(v) && (!log || v > 0); }

Axis fit_axis(const std::vector<PlotSeries>& series, bool use_x, bool log) {
  Axis a;
  a.log = log;
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& s : series) {
    const auto& vals = use_x ? s.x : s.y;
    const auto& other = use_x ? s.y : s.x;
    for (std::size_t i = 0; i < std::min(vals.size(), other.size()); ++i) {
      if (!usable(vals[i], log) || !std::isfinite(other[i])) continue;
      lo = std::min(lo, a.map(vals[i]));
      hi = std::max(hi, a.map(vals[i]));
    }
  }
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  if (hi == lo) lo -= 0.5, hi += 0.5;
  if (log) {
    lo = std::floor(lo);
    hi = std::ceil(hi);
  } else {
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  a.lo = lo;
  a.hi = hi;
  return a;
}

std::string tick_label(double mapped, bool log) {
  if (log) return fmt::format("1e{}", static_cast<int>(std::lround(mapped)));
  return fmt::format("{:.3g}", mapped);
}

}  // namespace

void write_line_plot(std::ostream& out, const std::vector<PlotSeries>& series, const PlotOptions& o) {
  const double left = 78, right = 150, top = 36, bottom = 52;
  const double pw = o.width - left - right, ph = o.height - top - bottom;
  const Axis ax = fit_axis(series, true, o.log_x);
  const Axis ay = fit_axis(series, false, o.log_y);

  out << fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n",
      o.width, o.height, o.width, o.height);
  out << fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n", o.width, o.height);
  out << fmt::format("<text x=\"{:.1f}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
                     left + pw / 2, escape(o.title));
  out << fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"none\" stroke=\"#444\"/>\n",
                     left, top, pw, ph);

  const int ticks = 5;
  for (int i = 0; i <= ticks; ++i) {
    const double fx = static_cast<double>(i) / ticks;
    const double px = left + fx * pw, py = top + ph - fx * ph;
    const double vx = ax.lo + fx * (ax.hi - ax.lo), vy = ay.lo + fx * (ay.hi - ay.lo);
    out << fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" y2=\"{2:.1f}\" stroke=\"#ddd\"/>\n", px, top,
                       top + ph);
    out << fmt::format("<line x1=\"{1:.1f}\" y1=\"{0:.1f}\" x2=\"{2:.1f}\" y2=\"{0:.1f}\" stroke=\"#ddd\"/>\n", py, left,
                       left + pw);
    out << fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n", px, top + ph + 16,
                       tick_label(vx, ax.log));
    out << fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{}</text>\n", left - 6, py + 4,
                       tick_label(vy, ay.log));
  }
  out << fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n", left + pw / 2,
                     o.height - 12.0, escape(o.x_label));
  out << fmt::format(
      "<text x=\"16\" y=\"{:.1f}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1f})\">{}</text>\n",
      top + ph / 2, top + ph / 2, escape(o.y_label));

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % kColors.size()];
    std::string pts;
    const auto& x = series[s].x;
    const auto& y = series[s].y;
    for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
      if (!usable(x[i], ax.log) || !usable(y[i], ay.log)) continue;
      pts += fmt::format("{:.2f},{:.2f} ", left + ax.unit(x[i]) * pw, top + ph - ay.unit(y[i]) * ph);
    }
    if (!pts.empty()) pts.pop_back();
    out << fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.6\" points=\"{}\"/>\n", color, pts);
    const double ly = top + 14 + 18.0 * static_cast<double>(s);
    out << fmt::format("<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                       left + pw + 10, ly, left + pw + 30, ly, color);
    out << fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">{}</text>\n", left + pw + 36, ly + 4,
                       escape(series[s].name));
  }
  out << "</svg>\n";
}

void write_line_plot(const std::filesystem::path& path, const std::vector<PlotSeries>& series,
                     const PlotOptions& options) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError(fmt::format("cannot open {} for writing", path.string()));
  write_line_plot(f, series, options);
  if (!f) throw IoError(fmt::format("write to {} failed", path.string()));
}

}  // namespace kvsim

#include "fpsis/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace fpsis {

namespace {

constexpr std::array<const char*, 8> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                              "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

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

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) {
      const double pad = std::max(std::abs(lo) * 0.05, 0.5);
      lo -= pad;
      hi += pad;
    }
  }
};

}  // namespace

void write_svg_plot(const PlotSpec& spec, std::span<const Series> series, std::ostream& out) {
  const double W = spec.width, H = spec.height;
  const double left = 70, right = 170, top = 40, bottom = 55;
  const double pw = W - left - right, ph = H - top - bottom;
  auto ty = [&](double y) { return spec.log_y ? std::log10(y) : y; };
  auto usable = [&](double x, double y) { return std::isfinite(x) && std::isfinite(y) && (!spec.log_y || y > 0); };

  Range xr, yr;
  for (const auto& s : series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
      if (usable(s.x[i], s.y[i])) {
        xr.add(s.x[i]);
        yr.add(ty(s.y[i]));
      }
  xr.finish();
  yr.finish();
  auto sx = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto sy = [&](double y) { return top + ph - (ty(y) - yr.lo) / (yr.hi - yr.lo) * ph; };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\"" << spec.height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << px(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(spec.title) << "</text>\n";
  out << "<rect x=\"" << px(left) << "\" y=\"" << px(top) << "\" width=\"" << px(pw) << "\" height=\"" << px(ph)
      << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (int t = 0; t <= 4; ++t) {
    const double xv = xr.lo + (xr.hi - xr.lo) * t / 4, X = sx(xv);
    out << "<line x1=\"" << px(X) << "\" y1=\"" << px(top + ph) << "\" x2=\"" << px(X) << "\" y2=\""
        << px(top + ph + 5) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << px(X) << "\" y=\"" << px(top + ph + 18) << "\" text-anchor=\"middle\">" << num(xv)
        << "</text>\n";
    const double yv = yr.lo + (yr.hi - yr.lo) * t / 4, Y = top + ph - ph * t / 4.0;
    out << "<line x1=\"" << px(left - 5) << "\" y1=\"" << px(Y) << "\" x2=\"" << px(left) << "\" y2=\"" << px(Y)
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << px(left - 8) << "\" y=\"" << px(Y + 4) << "\" text-anchor=\"end\">"
        << num(spec.log_y ? std::pow(10.0, yv) : yv) << "</text>\n";
  }
  out << "<text x=\"" << px(left + pw / 2) << "\" y=\"" << px(H - 12) << "\" text-anchor=\"middle\">"
      << escape(spec.xlabel) << "</text>\n";
  out << "<text transform=\"translate(16," << px(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(spec.ylabel) << (spec.log_y ? " (log)" : "") << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    const char* color = kPalette[k % kPalette.size()];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      out << (first ? "" : " ") << px(sx(s.x[i])) << ',' << px(sy(s.y[i]));
      first = false;
    }
    out << "\"/>\n";
    const double ly = top + 12 + 18.0 * k;
    out << "<line x1=\"" << px(left + pw + 12) << "\" y1=\"" << px(ly) << "\" x2=\"" << px(left + pw + 36)
        << "\" y2=\"" << px(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << px(left + pw + 42) << "\" y=\"" << px(ly + 4) << "\">" << escape(s.label) << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace fpsis

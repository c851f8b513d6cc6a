#include "svg.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "sgdlab/io.hpp"
#include "sgdlab/types.hpp"

namespace sgdlab::svg {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 20, kTop = 36, kBottom = 50;

std::string num(double v) {
  // two decimals are plenty for pixel coordinates and keep files small
  return format_double(std::round(v * 100.0) / 100.0);
}

std::string escape(const std::string& s) {
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

std::vector<double> ticks(double lo, double hi) {
  const double span = hi - lo;
  if (!(span > 0)) return {lo};
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  }
  std::vector<double> t;
  const auto k0 = static_cast<long long>(std::ceil(lo / step - 1e-9));
  const auto k1 = static_cast<long long>(std::floor(hi / step + 1e-9));
  for (long long k = k0; k <= k1; ++k) t.push_back(static_cast<double>(k) * step);
  return t;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string ramp(double f) {
  f = std::clamp(f, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(255 - 225 * f));
  const int g = static_cast<int>(std::lround(255 - 165 * f));
  const int b = static_cast<int>(std::lround(255 - 75 * f));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace

Plot::Plot(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

void Plot::line(std::span<const double> x, std::span<const double> y, std::string color, std::string label) {
  if (x.size() != y.size()) throw ConfigError("svg line: size mismatch");
  series_.push_back({Series::kLine, {x.begin(), x.end()}, {y.begin(), y.end()}, std::move(color), std::move(label)});
}

void Plot::vline(double x, std::string color, std::string label) {
  series_.push_back({Series::kVline, {x}, {}, std::move(color), std::move(label)});
}

void Plot::bars(std::span<const double> centers, std::span<const double> heights, std::string color,
                std::string label) {
  if (centers.size() != heights.size()) throw ConfigError("svg bars: size mismatch");
  series_.push_back(
      {Series::kBars, {centers.begin(), centers.end()}, {heights.begin(), heights.end()}, std::move(color), std::move(label)});
}

void Plot::heatmap(std::span<const double> xs, std::span<const double> ys, std::span<const double> values, double vmin,
                   double vmax) {
  if (values.size() != xs.size() * ys.size()) throw ConfigError("svg heatmap: size mismatch");
  heat_.push_back({{xs.begin(), xs.end()}, {ys.begin(), ys.end()}, {values.begin(), values.end()}, vmin, vmax});
}

void Plot::set_x_range(double lo, double hi) {
  fixed_x_ = true;
  x_lo_ = lo;
  x_hi_ = hi;
}

void Plot::set_y_range(double lo, double hi) {
  fixed_y_ = true;
  y_lo_ = lo;
  y_hi_ = hi;
}

std::string Plot::render() const {
  double xl = std::numeric_limits<double>::infinity(), xh = -xl, yl = xl, yh = -xl;
  auto grow_x = [&](double v) {
    if (std::isfinite(v)) xl = std::min(xl, v), xh = std::max(xh, v);
  };
  auto grow_y = [&](double v) {
    if (std::isfinite(v)) yl = std::min(yl, v), yh = std::max(yh, v);
  };
  for (const Series& s : series_) {
    for (double v : s.x) grow_x(v);
    for (double v : s.y) grow_y(v);
    if (s.kind == Series::kBars) grow_y(0.0);
  }
  for (const Heat& h : heat_) {
    for (double v : h.xs) grow_x(v);
    for (double v : h.ys) grow_y(v);
  }
  if (fixed_x_) xl = x_lo_, xh = x_hi_;
  if (fixed_y_) yl = y_lo_, yh = y_hi_;
  if (!std::isfinite(xl)) xl = 0, xh = 1;
  if (!std::isfinite(yl)) yl = 0, yh = 1;
  if (xh <= xl) xh = xl + 1;
  if (yh <= yl) yh = yl + 1;

  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xl) / (xh - xl) * pw; };
  auto py = [&](double y) { return kTop + (1.0 - (y - yl) / (yh - yl)) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<clipPath id=\"area\"><rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
    << "\"/></clipPath>\n";

  for (const Heat& h : heat_) {
    auto edges = [](const std::vector<double>& c, std::size_t i) {
      const double lo = i == 0 ? c[0] - 0.5 * (c.size() > 1 ? c[1] - c[0] : 1.0) : 0.5 * (c[i - 1] + c[i]);
      const double hi = i + 1 == c.size() ? c[i] + 0.5 * (c.size() > 1 ? c[i] - c[i - 1] : 1.0) : 0.5 * (c[i] + c[i + 1]);
      return std::pair{lo, hi};
    };
    o << "<g clip-path=\"url(#area)\">\n";
    for (std::size_t iy = 0; iy < h.ys.size(); ++iy) {
      const auto [y0, y1] = edges(h.ys, iy);
      for (std::size_t ix = 0; ix < h.xs.size(); ++ix) {
        const auto [x0, x1] = edges(h.xs, ix);
        const double v = h.values[iy * h.xs.size() + ix];
        const double f = h.vmax > h.vmin ? (v - h.vmin) / (h.vmax - h.vmin) : 0.0;
        o << "<rect x=\"" << num(px(x0)) << "\" y=\"" << num(py(y1)) << "\" width=\"" << num(px(x1) - px(x0) + 0.5)
          << "\" height=\"" << num(py(y0) - py(y1) + 0.5) << "\" fill=\"" << ramp(f) << "\"/>\n";
      }
    }
    o << "</g>\n";
  }

  std::size_t legend = 0;
  for (const Series& s : series_) {
    o << "<g clip-path=\"url(#area)\">\n";
    if (s.kind == Series::kLine) {
      o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
      bool first = true;
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        o << (first ? "" : " ") << num(px(s.x[i])) << ',' << num(py(s.y[i]));
        first = false;
      }
      o << "\"/>\n";
    } else if (s.kind == Series::kVline) {
      o << "<line x1=\"" << num(px(s.x[0])) << "\" x2=\"" << num(px(s.x[0])) << "\" y1=\"" << kTop << "\" y2=\""
        << kTop + ph << "\" stroke=\"" << s.color << "\" stroke-dasharray=\"4 3\"/>\n";
    } else {
      const double w = s.x.size() > 1 ? (s.x[1] - s.x[0]) : 1.0;
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        const double x0 = px(s.x[i] - 0.5 * w), x1 = px(s.x[i] + 0.5 * w);
        const double y0 = py(0.0), y1 = py(s.y[i]);
        o << "<rect x=\"" << num(x0) << "\" y=\"" << num(std::min(y0, y1)) << "\" width=\"" << num(x1 - x0)
          << "\" height=\"" << num(std::abs(y0 - y1)) << "\" fill=\"" << s.color << "\" fill-opacity=\"0.5\"/>\n";
      }
    }
    o << "</g>\n";
    if (!s.label.empty()) {
      const double ly = kTop + 14 + 16 * static_cast<double>(legend++);
      o << "<rect x=\"" << kWidth - kRight - 150 << "\" y=\"" << ly - 9 << "\" width=\"10\" height=\"10\" fill=\""
        << s.color << "\"/>\n";
      o << "<text x=\"" << kWidth - kRight - 135 << "\" y=\"" << ly << "\">" << escape(s.label) << "</text>\n";
    }
  }

  o << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : ticks(xl, xh)) {
    o << "<line x1=\"" << num(px(t)) << "\" x2=\"" << num(px(t)) << "\" y1=\"" << kTop + ph << "\" y2=\""
      << kTop + ph + 5 << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << num(px(t)) << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">" << tick_label(t)
      << "</text>\n";
  }
  for (double t : ticks(yl, yh)) {
    o << "<line x1=\"" << kLeft - 5 << "\" x2=\"" << kLeft << "\" y1=\"" << num(py(t)) << "\" y2=\"" << num(py(t))
      << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << kLeft - 8 << "\" y=\"" << num(py(t) + 4) << "\" text-anchor=\"end\">" << tick_label(t)
      << "</text>\n";
  }
  o << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(title_)
    << "</text>\n";
  o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 10 << "\" text-anchor=\"middle\">" << escape(x_label_)
    << "</text>\n";
  o << "<text x=\"16\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << kTop + ph / 2 << ")\">" << escape(y_label_) << "</text>\n";
  o << "</svg>\n";
  return o.str();
}

void Plot::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << render();
}

}  // namespace sgdlab::svg

#include "report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "inertia/common/error.hpp"

namespace inertia::cli {
namespace {

struct Frame {
  double x0, x1, y0, y1;
  int w, h;
  static constexpr int kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;

  [[nodiscard]] double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (w - kLeft - kRight); }
  [[nodiscard]] double py(double y) const { return h - kBottom - (y - y0) / (y1 - y0) * (h - kTop - kBottom); }
};

std::string esc(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '&': o += "&amp;"; break;
      default: o += c;
    }
  }
  return o;
}

std::string fixed(double v, int digits = 3) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

void widen(double& lo, double& hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    lo = 0;
    hi = 1;
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
}

std::string open_svg(const Frame& f, const ChartOptions& o) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.w << "\" height=\"" << f.h << "\" viewBox=\"0 0 "
     << f.w << ' ' << f.h << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << f.w / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << esc(o.title) << "</text>\n";
  const double l = Frame::kLeft, r = f.w - Frame::kRight, t = Frame::kTop, b = f.h - Frame::kBottom;
  os << "<rect x=\"" << l << "\" y=\"" << t << "\" width=\"" << r - l << "\" height=\"" << b - t
     << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = f.x0 + (f.x1 - f.x0) * i / 4.0, fy = f.y0 + (f.y1 - f.y0) * i / 4.0;
    const std::string yl = o.log_y ? fixed(std::pow(10.0, fy)) : fixed(fy);
    os << "<text x=\"" << f.px(fx) << "\" y=\"" << b + 16 << "\" text-anchor=\"middle\">" << fixed(fx) << "</text>\n";
    os << "<text x=\"" << l - 6 << "\" y=\"" << f.py(fy) + 4 << "\" text-anchor=\"end\">" << yl << "</text>\n";
    os << "<line x1=\"" << l << "\" y1=\"" << f.py(fy) << "\" x2=\"" << r << "\" y2=\"" << f.py(fy)
       << "\" stroke=\"#ddd\"/>\n";
  }
  os << "<text x=\"" << (l + r) / 2 << "\" y=\"" << f.h - 12 << "\" text-anchor=\"middle\">" << esc(o.x_label)
     << "</text>\n";
  os << "<text x=\"16\" y=\"" << (t + b) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << (t + b) / 2
     << ")\">" << esc(o.y_label) << "</text>\n";
  return os.str();
}

}  // namespace

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write " + tmp);
    out << text;
    if (!out) throw DataError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string line_chart_svg(std::span<const Series> series, const ChartOptions& o) {
  auto ty = [&](double v) { return o.log_y ? std::log10(std::max(v, 1e-300)) : v; };
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  widen(x0, x1);
  widen(y0, y1);
  const Frame f{x0, x1, y0, y1, o.width, o.height};
  std::ostringstream os;
  os << open_svg(f, o);
  int legend = 0;
  for (const auto& s : series) {
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (std::isfinite(s.y[i])) os << fixed(f.px(s.x[i]), 6) << ',' << fixed(f.py(ty(s.y[i])), 6) << ' ';
    os << "\"/>\n";
    const int ly = Frame::kTop + 16 + 16 * legend++;
    os << "<line x1=\"" << o.width - 150 << "\" y1=\"" << ly - 4 << "\" x2=\"" << o.width - 130 << "\" y2=\"" << ly - 4
       << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>";
    os << "<text x=\"" << o.width - 125 << "\" y=\"" << ly << "\">" << esc(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string scatter_svg(std::span<const double> y, std::span<const double> y_hat, const ChartOptions& o) {
  require(y.size() == y_hat.size(), "scatter: size mismatch");
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t i = 0; i < y.size(); ++i) {
    lo = std::min({lo, y[i], y_hat[i]});
    hi = std::max({hi, y[i], y_hat[i]});
  }
  widen(lo, hi);
  const double pad = 0.05 * (hi - lo);
  const Frame f{lo - pad, hi + pad, lo - pad, hi + pad, o.width, o.height};
  std::ostringstream os;
  os << open_svg(f, o);
  os << "<line x1=\"" << f.px(f.x0) << "\" y1=\"" << f.py(f.y0) << "\" x2=\"" << f.px(f.x1) << "\" y2=\"" << f.py(f.y1)
     << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
  for (std::size_t i = 0; i < y.size(); ++i)
    os << "<circle cx=\"" << fixed(f.px(y[i]), 6) << "\" cy=\"" << fixed(f.py(y_hat[i]), 6)
       << "\" r=\"2.5\" fill=\"#1f77b4\" fill-opacity=\"0.6\"/>\n";
  os << "</svg>\n";
  return os.str();
}

Histogram histogram(std::span<const double> values, std::size_t bins) {
  require(bins > 0, "histogram: bins must be positive");
  double hi = 0.0;
  for (double v : values) hi = std::max(hi, v);
  if (hi <= 0.0) hi = 1.0;
  Histogram h;
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = hi * static_cast<double>(i) / static_cast<double>(bins);
  h.counts.assign(bins, 0);
  for (double v : values) {
    auto b = static_cast<std::size_t>(v / hi * static_cast<double>(bins));
    h.counts[std::min(b, bins - 1)]++;
  }
  return h;
}

std::string histogram_svg(const Histogram& h, const ChartOptions& o) {
  std::size_t top = 1;
  for (auto c : h.counts) top = std::max(top, c);
  const Frame f{h.edges.front(), h.edges.back(), 0.0, static_cast<double>(top), o.width, o.height};
  std::ostringstream os;
  os << open_svg(f, o);
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    const double x = f.px(h.edges[i]), w = f.px(h.edges[i + 1]) - x;
    const double y = f.py(static_cast<double>(h.counts[i]));
    os << "<rect x=\"" << fixed(x, 6) << "\" y=\"" << fixed(y, 6) << "\" width=\"" << fixed(std::max(w - 1, 0.5), 6)
       << "\" height=\"" << fixed(f.py(0) - y, 6) << "\" fill=\"#ff7f0e\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string text_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> w(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) w[c] = header[c].size();
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size() && c < w.size(); ++c) w[c] = std::max(w[c], r[c].size());
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      os << cells[c];
      if (c + 1 < cells.size()) os << std::string(w[c] - cells[c].size() + 2, ' ');
    }
    os << '\n';
  };
  line(header);
  std::size_t total = 0;
  for (auto x : w) total += x + 2;
  os << std::string(total > 2 ? total - 2 : 0, '-') << '\n';
  for (const auto& r : rows) line(r);
  return os.str();
}

}  // namespace inertia::cli

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace inertia::cli {

/// Shortest round-trip decimal form.
std::string num(double v);

/// Writes text atomically enough for our purposes (write then rename).
void write_text(const std::filesystem::path& path, const std::string& text);

struct Series {
  std::string label;
  std::vector<double> x, y;
  std::string color;
};

struct ChartOptions {
  std::string title, x_label, y_label;
  bool log_y = false;
  int width = 640, height = 400;
};

/// Polyline chart (learning curves).
std::string line_chart_svg(std::span<const Series> series, const ChartOptions& opts);

/// Scatter of predictions against labels with the y = x reference line.
std::string scatter_svg(std::span<const double> y, std::span<const double> y_hat, const ChartOptions& opts);

struct Histogram {
  std::vector<double> edges;  // n + 1
  std::vector<std::size_t> counts;
};

/// Equal-width bins over [0, max(values)] (or [0, 1] when all values are 0).
Histogram histogram(std::span<const double> values, std::size_t bins);
std::string histogram_svg(const Histogram& h, const ChartOptions& opts);

/// Left-aligned fixed-width text table for the console.
std::string text_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows);

}  // namespace inertia::cli

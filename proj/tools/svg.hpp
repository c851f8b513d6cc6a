#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace sgdlab::svg {

/// Minimal static plot writer: line series, vertical markers, histogram bars
/// and heatmaps on linear axes. Output depends only on the data.
class Plot {
 public:
  Plot(std::string title, std::string x_label, std::string y_label);

  void line(std::span<const double> x, std::span<const double> y, std::string color, std::string label = {});
  void vline(double x, std::string color, std::string label = {});
  /// Bars of equal width centred on `centers`.
  void bars(std::span<const double> centers, std::span<const double> heights, std::string color,
            std::string label = {});
  /// Cells on the grid xs (columns) by ys (rows); values row-major [iy][ix],
  /// mapped to a white-to-blue ramp over [vmin, vmax].
  void heatmap(std::span<const double> xs, std::span<const double> ys, std::span<const double> values, double vmin,
               double vmax);

  void set_x_range(double lo, double hi);
  void set_y_range(double lo, double hi);

  std::string render() const;
  void save(const std::filesystem::path& path) const;

 private:
  struct Series {
    enum Kind { kLine, kVline, kBars } kind;
    std::vector<double> x;
    std::vector<double> y;
    std::string color;
    std::string label;
  };
  struct Heat {
    std::vector<double> xs, ys, values;
    double vmin, vmax;
  };

  std::string title_, x_label_, y_label_;
  std::vector<Series> series_;
  std::vector<Heat> heat_;
  bool fixed_x_ = false, fixed_y_ = false;
  double x_lo_ = 0, x_hi_ = 1, y_lo_ = 0, y_hi_ = 1;
};

}  // namespace sgdlab::svg

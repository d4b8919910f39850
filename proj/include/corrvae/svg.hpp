#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace corrvae::svg {

/// Categorical palette, cycles after ten entries.
std::string palette(int index);
/// Blue-white-red ramp for t in [0, 1].
std::string diverging(double t);

/// Minimal 2-D chart: scatter, line and bar layers on shared linear axes.
class Plot {
 public:
  Plot(std::string title, std::string x_label, std::string y_label, int width = 640, int height = 480);

  void points(const std::vector<double>& x, const std::vector<double>& y, const std::string& color,
              const std::string& label = {}, double radius = 3.0);
  /// Per-point colors and radii.
  void points(const std::vector<double>& x, const std::vector<double>& y, const std::vector<std::string>& colors,
              const std::vector<double>& radii);
  void line(const std::vector<double>& x, const std::vector<double>& y, const std::string& color,
            const std::string& label = {});
  /// Bars of the given width starting at each left edge.
  void bars(const std::vector<double>& left, double width, const std::vector<double>& heights,
            const std::string& color, const std::string& label = {});
  /// Axis-aligned filled cells (heatmap layer).
  void cells(const std::vector<double>& x, const std::vector<double>& y, double w, double h,
             const std::vector<std::string>& colors);

  std::string render() const;

 private:
  struct Layer {
    enum class Kind { points, line, bars, cells } kind;
    std::vector<double> x, y;
    std::vector<std::string> colors;
    std::vector<double> radii;
    double width = 0.0, height = 0.0;
    std::string label;
  };

  std::string title_, x_label_, y_label_;
  int width_, height_;
  std::vector<Layer> layers_;
};

/// Matrix heatmap with values mapped from [lo, hi] onto the diverging ramp.
std::string heatmap(const Eigen::MatrixXd& m, const std::string& title, double lo = -1.0, double hi = 1.0);

}  // namespace corrvae::svg

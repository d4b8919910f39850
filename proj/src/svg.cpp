#include "corrvae/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace corrvae::svg {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string palette(int index) {
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return colors[((index % 10) + 10) % 10];
}

std::string diverging(double t) {
  t = std::clamp(std::isfinite(t) ? t : 0.5, 0.0, 1.0);
  int r, g, b;
  if (t < 0.5) {
    const double u = t / 0.5;
    r = static_cast<int>(59 + u * (255 - 59));
    g = static_cast<int>(76 + u * (255 - 76));
    b = static_cast<int>(192 + u * (255 - 192));
  } else {
    const double u = (t - 0.5) / 0.5;
    r = static_cast<int>(255 + u * (180 - 255));
    g = static_cast<int>(255 + u * (4 - 255));
    b = static_cast<int>(255 + u * (38 - 255));
  }
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

Plot::Plot(std::string title, std::string x_label, std::string y_label, int width, int height)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)),
      width_(width), height_(height) {}

void Plot::points(const std::vector<double>& x, const std::vector<double>& y, const std::string& color,
                  const std::string& label, double radius) {
  Layer l{Layer::Kind::points, x, y, std::vector<std::string>(x.size(), color),
          std::vector<double>(x.size(), radius), 0.0, 0.0, label};
  layers_.push_back(std::move(l));
}

void Plot::points(const std::vector<double>& x, const std::vector<double>& y,
                  const std::vector<std::string>& colors, const std::vector<double>& radii) {
  layers_.push_back({Layer::Kind::points, x, y, colors, radii, 0.0, 0.0, {}});
}

void Plot::line(const std::vector<double>& x, const std::vector<double>& y, const std::string& color,
                const std::string& label) {
  layers_.push_back({Layer::Kind::line, x, y, {color}, {}, 0.0, 0.0, label});
}

void Plot::bars(const std::vector<double>& left, double width, const std::vector<double>& heights,
                const std::string& color, const std::string& label) {
  layers_.push_back({Layer::Kind::bars, left, heights, {color}, {}, width, 0.0, label});
}

void Plot::cells(const std::vector<double>& x, const std::vector<double>& y, double w, double h,
                 const std::vector<std::string>& colors) {
  layers_.push_back({Layer::Kind::cells, x, y, colors, {}, w, h, {}});
}

std::string Plot::render() const {
  const double ml = 70, mr = 20, mt = 40, mb = 55;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& l : layers_) {
    for (std::size_t i = 0; i < l.x.size(); ++i) {
      const double xr = l.kind == Layer::Kind::bars || l.kind == Layer::Kind::cells ? l.x[i] + l.width : l.x[i];
      const double yr = l.kind == Layer::Kind::cells ? l.y[i] + l.height : l.y[i];
      x0 = std::min(x0, l.x[i]);
      x1 = std::max(x1, xr);
      y0 = std::min(y0, l.kind == Layer::Kind::bars ? 0.0 : l.y[i]);
      y1 = std::max(y1, yr);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y1 = y0 + 1;
  const double pw = width_ - ml - mr, ph = height_ - mt - mb;
  auto sx = [&](double x) { return ml + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return mt + ph - (y - y0) / (y1 - y0) * ph; };

  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width_) +
                  "\" height=\"" + std::to_string(height_) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + num(width_ / 2.0) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" + escape(title_) + "</text>\n";

  for (const auto& l : layers_) {
    switch (l.kind) {
      case Layer::Kind::cells:
        for (std::size_t i = 0; i < l.x.size(); ++i)
          s += "<rect x=\"" + num(sx(l.x[i])) + "\" y=\"" + num(sy(l.y[i] + l.height)) + "\" width=\"" +
               num(sx(l.x[i] + l.width) - sx(l.x[i]) + 0.5) + "\" height=\"" +
               num(sy(l.y[i]) - sy(l.y[i] + l.height) + 0.5) + "\" fill=\"" + l.colors[i] + "\"/>\n";
        break;
      case Layer::Kind::bars:
        for (std::size_t i = 0; i < l.x.size(); ++i)
          s += "<rect x=\"" + num(sx(l.x[i])) + "\" y=\"" + num(sy(l.y[i])) + "\" width=\"" +
               num(std::max(0.5, sx(l.x[i] + l.width) - sx(l.x[i]) - 1)) + "\" height=\"" +
               num(sy(0.0) - sy(l.y[i])) + "\" fill=\"" + l.colors.front() + "\" fill-opacity=\"0.6\"/>\n";
        break;
      case Layer::Kind::line: {
        s += "<polyline fill=\"none\" stroke=\"" + l.colors.front() + "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < l.x.size(); ++i) s += num(sx(l.x[i])) + "," + num(sy(l.y[i])) + " ";
        s += "\"/>\n";
        break;
      }
      case Layer::Kind::points:
        for (std::size_t i = 0; i < l.x.size(); ++i)
          s += "<circle cx=\"" + num(sx(l.x[i])) + "\" cy=\"" + num(sy(l.y[i])) + "\" r=\"" + num(l.radii[i]) +
               "\" fill=\"" + l.colors[i] + "\" fill-opacity=\"0.8\"/>\n";
        break;
    }
  }

  s += "<rect x=\"" + num(ml) + "\" y=\"" + num(mt) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
    s += "<text x=\"" + num(sx(xv)) + "\" y=\"" + num(mt + ph + 16) + "\" text-anchor=\"middle\">" + tick(xv) + "</text>\n";
    s += "<text x=\"" + num(ml - 6) + "\" y=\"" + num(sy(yv) + 4) + "\" text-anchor=\"end\">" + tick(yv) + "</text>\n";
  }
  s += "<text x=\"" + num(ml + pw / 2) + "\" y=\"" + num(height_ - 12.0) + "\" text-anchor=\"middle\">" +
       escape(x_label_) + "</text>\n";
  s += "<text transform=\"translate(16," + num(mt + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
       escape(y_label_) + "</text>\n";

  int legend = 0;
  for (const auto& l : layers_) {
    if (l.label.empty()) continue;
    const double ly = mt + 14 + 16.0 * legend++;
    s += "<rect x=\"" + num(ml + pw - 150) + "\" y=\"" + num(ly - 9) + "\" width=\"10\" height=\"10\" fill=\"" +
         l.colors.front() + "\"/>\n";
    s += "<text x=\"" + num(ml + pw - 135) + "\" y=\"" + num(ly) + "\">" + escape(l.label) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

std::string heatmap(const Eigen::MatrixXd& m, const std::string& title, double lo, double hi) {
  const int cell = std::max(4, 440 / static_cast<int>(std::max<Eigen::Index>(1, m.rows())));
  const int size = cell * static_cast<int>(m.rows());
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(size + 40) +
                  "\" height=\"" + std::to_string(size + 60) + "\" font-family=\"sans-serif\" font-size=\"13\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"20\" y=\"24\">" + escape(title) + "</text>\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      s += "<rect x=\"" + std::to_string(20 + cell * j) + "\" y=\"" + std::to_string(40 + cell * i) +
           "\" width=\"" + std::to_string(cell) + "\" height=\"" + std::to_string(cell) + "\" fill=\"" +
           diverging((m(i, j) - lo) / (hi - lo)) + "\"/>\n";
  s += "</svg>\n";
  return s;
}

}  // namespace corrvae::svg

#include "vecmap/svg.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace vecmap {

namespace {

const char* kClassColors[kNumClasses] = {"#ff7f0e", "#2ca02c", "#d62728"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

void polyline_tag(std::ostream& out, const std::vector<XyPoint>& pts,
                  const std::string& color, double width, bool closed,
                  double opacity = 1.0) {
  out << (closed ? "<polygon" : "<polyline") << " points=\"";
  for (const XyPoint& p : pts) out << fmt(p.x) << "," << fmt(p.y) << " ";
  out << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
      << width << "\" stroke-opacity=\"" << opacity << "\"/>\n";
}

}  // namespace

void write_line_chart(const std::filesystem::path& path,
                      const std::string& title, const std::string& x_label,
                      const std::string& y_label,
                      const std::vector<XySeries>& series, double x_min,
                      double x_max, double y_min, double y_max) {
  const double W = 640, H = 440;
  const double L = 60, R = 20, T = 40, B = 50;  // margins
  const double xr = x_max > x_min ? x_max - x_min : 1.0;
  const double yr = y_max > y_min ? y_max - y_min : 1.0;
  auto px = [&](double x) { return L + (x - x_min) / xr * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y_min) / yr * (H - T - B); };

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
      << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << " " << H
      << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-size=\"16\">" << title << "</text>\n";

  // axes with 5 ticks each
  out << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R
      << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L
      << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = x_min + xr * i / 5, yv = y_min + yr * i / 5;
    out << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 18
        << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt(xv)
        << "</text>\n";
    out << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4
        << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(yv)
        << "</text>\n";
    out << "<line x1=\"" << L << "\" y1=\"" << py(yv) << "\" x2=\"" << W - R
        << "\" y2=\"" << py(yv) << "\" stroke=\"#eeeeee\"/>\n";
  }
  out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12
      << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label
      << "</text>\n";
  out << "<text x=\"16\" y=\"" << (T + H - B) / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 "
      << "16 " << (T + H - B) / 2 << ")\">" << y_label << "</text>\n";

  double legend_y = T + 8;
  for (const XySeries& s : series) {
    std::vector<XyPoint> pts;
    pts.reserve(s.points.size());
    for (const XyPoint& p : s.points) pts.push_back({px(p.x), py(p.y)});
    polyline_tag(out, pts, s.color, 1.8, false);
    out << "<text x=\"" << W - R - 8 << "\" y=\"" << legend_y
        << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << s.color
        << "\">" << s.label << "</text>\n";
    legend_y += 16;
  }
  out << "</svg>\n";
}

void write_bev_overlay(const std::filesystem::path& path,
                       const std::vector<MapElement>& gts,
                       const std::vector<ScoredElement>& preds,
                       double half_extent, double min_score) {
  const double W = 520;
  const double pad = 10;
  // x right, y up: flip y when mapping to pixel rows
  auto px = [&](Point2 p) -> XyPoint {
    const double s = (W - 2 * pad) / (2 * half_extent);
    return {pad + (p.x + half_extent) * s, W - pad - (p.y + half_extent) * s};
  };

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
      << "\" height=\"" << W << "\" viewBox=\"0 0 " << W << " " << W
      << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<rect x=\"" << pad << "\" y=\"" << pad << "\" width=\""
      << W - 2 * pad << "\" height=\"" << W - 2 * pad
      << "\" fill=\"none\" stroke=\"#cccccc\"/>\n";

  for (const MapElement& e : gts) {
    std::vector<XyPoint> pts;
    for (const Point2& p : e.points) pts.push_back(px(p));
    polyline_tag(out, pts, "#999999", 4.0, e.closed, 0.6);
  }
  for (const ScoredElement& se : preds) {
    if (se.score < min_score) continue;
    std::vector<XyPoint> pts;
    for (const Point2& p : se.element.points) pts.push_back(px(p));
    polyline_tag(out, pts, kClassColors[static_cast<int>(se.element.class_id)],
                 1.6, se.element.closed, std::clamp(se.score, 0.2, 1.0));
  }
  out << "</svg>\n";
}

}  // namespace vecmap

#include "radarloop/plots.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace radarloop {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 640.0;
constexpr double kMargin = 50.0;

std::string header(const std::string& title) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << kWidth / 2 << "\" y=\"25\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
     << title << "</text>\n";
  return os.str();
}

std::string polyline(const std::vector<Vec2>& pts, const std::string& color) {
  std::ostringstream os;
  os.precision(6);
  os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
  for (const auto& p : pts) os << p.x() << ',' << p.y() << ' ';
  os << "\"/>\n";
  return os.str();
}

}  // namespace

std::string trajectory_svg(const std::vector<PlotSeries>& series, const std::string& title) {
  double min_x = std::numeric_limits<double>::infinity(), min_y = min_x;
  double max_x = -min_x, max_y = -min_x;
  for (const auto& s : series) {
    for (const auto& p : s.points) {
      min_x = std::min(min_x, p.x());
      max_x = std::max(max_x, p.x());
      min_y = std::min(min_y, p.y());
      max_y = std::max(max_y, p.y());
    }
  }
  std::string out = header(title);
  if (!std::isfinite(min_x)) return out + "</svg>\n";
  const double span = std::max({max_x - min_x, max_y - min_y, 1e-9});
  const double scale = (kWidth - 2 * kMargin) / span;
  for (const auto& s : series) {
    std::vector<Vec2> px;
    px.reserve(s.points.size());
    for (const auto& p : s.points) {
      px.emplace_back(kMargin + (p.x() - min_x) * scale, kHeight - kMargin - (p.y() - min_y) * scale);
    }
    out += polyline(px, s.color);
  }
  double y = 45.0;
  for (const auto& s : series) {
    std::ostringstream os;
    os << "<text x=\"" << kMargin << "\" y=\"" << y << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\""
       << s.color << "\">" << s.label << "</text>\n";
    out += os.str();
    y += 15.0;
  }
  std::ostringstream os;
  os << "<text x=\"" << kWidth - kMargin << "\" y=\"" << kHeight - 15
     << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">extent " << span << " m</text>\n";
  return out + os.str() + "</svg>\n";
}

std::string pr_curve_svg(const std::vector<PrPoint>& curve, const std::string& title) {
  std::string out = header(title);
  const double w = kWidth - 2 * kMargin;
  const double h = kHeight - 2 * kMargin;
  std::ostringstream axes;
  axes << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << w << "\" height=\"" << h
       << "\" fill=\"none\" stroke=\"black\"/>\n"
       << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 15
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">recall</text>\n"
       << "<text x=\"15\" y=\"" << kHeight / 2
       << "\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 15 " << kHeight / 2
       << ")\">precision</text>\n";
  out += axes.str();
  std::vector<PrPoint> sorted = curve;
  std::sort(sorted.begin(), sorted.end(), [](const PrPoint& a, const PrPoint& b) {
    return a.recall < b.recall || (a.recall == b.recall && a.precision > b.precision);
  });
  std::vector<Vec2> px;
  for (const auto& p : sorted) px.emplace_back(kMargin + p.recall * w, kMargin + (1.0 - p.precision) * h);
  out += polyline(px, "steelblue");
  return out + "</svg>\n";
}

std::string heatmap_svg(const Eigen::MatrixXd& m, const std::string& title) {
  std::string out = header(title);
  if (m.size() == 0) return out + "</svg>\n";
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double v = m.data()[i];
    if (std::isnan(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double cw = (kWidth - 2 * kMargin) / static_cast<double>(m.cols());
  const double ch = (kHeight - 2 * kMargin) / static_cast<double>(m.rows());
  std::ostringstream os;
  os.precision(5);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      if (std::isnan(v)) continue;
      const double t = hi > lo ? (v - lo) / (hi - lo) : 0.0;
      const int g = static_cast<int>(std::round(255.0 * t));
      os << "<rect x=\"" << kMargin + static_cast<double>(c) * cw << "\" y=\"" << kMargin + static_cast<double>(r) * ch
         << "\" width=\"" << cw << "\" height=\"" << ch << "\" fill=\"rgb(" << g << ',' << g << ',' << g << ")\"/>\n";
    }
  }
  return out + os.str() + "</svg>\n";
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << text;
}

}  // namespace radarloop

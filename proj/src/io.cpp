#include "edgebot/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace edgebot::io {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  return os;
}

}  // namespace

std::string format_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void write_trajectory_csv(const std::string& path,
                          std::span<const sim::TimedPose> traj) {
  auto os = open_out(path);
  os << "t_us,x,y,theta\n";
  for (const auto& p : traj) {
    os << p.t.micros << ',' << format_num(p.pose.x) << ','
       << format_num(p.pose.y) << ',' << format_num(p.pose.theta.rad()) << '\n';
  }
}

void write_odometry_csv(const std::string& path,
                        std::span<const sim::OdometrySample> samples) {
  auto os = open_out(path);
  os << "t_us,dd,dtheta\n";
  for (const auto& s : samples) {
    os << s.t.micros << ',' << format_num(s.dd) << ',' << format_num(s.dtheta)
       << '\n';
  }
}

void write_rtt_csv(const std::string& path,
                   std::span<const sim::RttSample> samples) {
  auto os = open_out(path);
  os << "t_us,ap_id,range_m\n";
  for (const auto& s : samples) {
    os << s.t.micros << ',' << static_cast<int>(s.ap_id) << ','
       << format_num(s.range) << '\n';
  }
}

void write_cdf_csv(const std::string& path,
                   std::span<const std::pair<double, double>> cdf) {
  auto os = open_out(path);
  os << "error_m,fraction\n";
  for (const auto& [e, f] : cdf) {
    os << format_num(e) << ',' << format_num(f) << '\n';
  }
}

void write_text(const std::string& path, const std::string& text) {
  auto os = open_out(path);
  os << text;
}

void write_overlay_svg(const std::string& path, double area_w, double area_h,
                       std::span<const Vec2> aps,
                       std::span<const SvgSeries> series) {
  constexpr double kScale = 60.0;  // px per meter
  constexpr double kMargin = 50.0;
  const double w = area_w * kScale + 2 * kMargin;
  const double h = area_h * kScale + 2 * kMargin;
  auto px = [&](double x) { return kMargin + x * kScale; };
  auto py = [&](double y) { return h - kMargin - y * kScale; };  // y up

  auto os = open_out(path);
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" "
                "height=\"%.0f\" viewBox=\"0 0 %.0f %.0f\">\n",
                w, h, w, h);
  os << buf << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // Axis frame and meter ticks.
  std::snprintf(buf, sizeof(buf),
                "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" "
                "fill=\"none\" stroke=\"black\"/>\n",
                px(0), py(area_h), area_w * kScale, area_h * kScale);
  os << buf;
  const int tick_step = area_w > 15 || area_h > 15 ? 5 : 1;
  for (int x = 0; x <= static_cast<int>(area_w); x += tick_step) {
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                  "stroke=\"black\"/><text x=\"%.1f\" y=\"%.1f\" "
                  "font-size=\"12\" text-anchor=\"middle\">%d</text>\n",
                  px(x), py(0), px(x), py(0) + 6, px(x), py(0) + 20, x);
    os << buf;
  }
  for (int y = 0; y <= static_cast<int>(area_h); y += tick_step) {
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                  "stroke=\"black\"/><text x=\"%.1f\" y=\"%.1f\" "
                  "font-size=\"12\" text-anchor=\"end\">%d</text>\n",
                  px(0) - 6, py(y), px(0), py(y), px(0) - 10, py(y) + 4, y);
    os << buf;
  }

  for (const auto& ap : aps) {
    std::snprintf(buf, sizeof(buf),
                  "<path d=\"M %.1f %.1f l 8 8 m -8 0 l 8 -8\" "
                  "stroke=\"green\" stroke-width=\"2\"/>\n",
                  px(ap.x) - 4, py(ap.y) - 4);
    os << buf;
  }

  double legend_y = 20.0;
  for (const auto& s : series) {
    os << "<polyline fill=\"none\" stroke=\"" << s.color
       << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& p : s.traj) {
      std::snprintf(buf, sizeof(buf), "%.1f,%.1f ", px(p.pose.x), py(p.pose.y));
      os << buf;
    }
    os << "\"/>\n";
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                  "stroke=\"%s\" stroke-width=\"3\"/><text x=\"%.1f\" "
                  "y=\"%.1f\" font-size=\"13\">%s</text>\n",
                  w - 160.0, legend_y, w - 130.0, legend_y, s.color.c_str(),
                  w - 124.0, legend_y + 4, s.label.c_str());
    os << buf;
    legend_y += 18.0;
  }
  os << "</svg>\n";
}

}  // namespace edgebot::io

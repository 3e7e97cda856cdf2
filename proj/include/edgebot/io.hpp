#pragma once

// CSV and SVG artifact writers. All float formatting is fixed so identical
// runs produce byte-identical files.

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "edgebot/sim.hpp"

namespace edgebot::io {

std::string format_num(double v);  // %.9g

void write_trajectory_csv(const std::string& path,
                          std::span<const sim::TimedPose> traj);
void write_odometry_csv(const std::string& path,
                        std::span<const sim::OdometrySample> samples);
void write_rtt_csv(const std::string& path,
                   std::span<const sim::RttSample> samples);
void write_cdf_csv(const std::string& path,
                   std::span<const std::pair<double, double>> cdf);
void write_text(const std::string& path, const std::string& text);

struct SvgSeries {
  std::string label;
  std::string color;
  std::span<const sim::TimedPose> traj;
};

// Minimal hand-written overlay plot: one polyline per series, meter-grid
// axis ticks, AP markers, legend.
void write_overlay_svg(const std::string& path, double area_w, double area_h,
                       std::span<const Vec2> aps,
                       std::span<const SvgSeries> series);

}  // namespace edgebot::io

#include "edgebot/geometry.hpp"

#include <stdexcept>

namespace edgebot {

double wrap_angle(double radians) {
  if (!std::isfinite(radians)) {
    throw std::invalid_argument("wrap_angle: non-finite input");
  }
  double r = std::remainder(radians, kTwoPi);  // [-pi, pi]
  if (r <= -kPi) {
    r += kTwoPi;  // boundary convention: -pi maps to +pi
  }
  return r;
}

Pose2::Pose2(double x_, double y_, double theta_rad)
    : x(x_), y(y_), theta(theta_rad) {
  if (!std::isfinite(x_) || !std::isfinite(y_)) {
    throw std::invalid_argument("Pose2: non-finite translation");
  }
}

Pose2 compose(const Pose2& a, const Pose2& b) {
  const double c = std::cos(a.theta.rad());
  const double s = std::sin(a.theta.rad());
  return Pose2(a.x + c * b.x - s * b.y,
               a.y + s * b.x + c * b.y,
               a.theta.rad() + b.theta.rad());
}

Pose2 inverse(const Pose2& p) {
  const double c = std::cos(p.theta.rad());
  const double s = std::sin(p.theta.rad());
  return Pose2(-c * p.x - s * p.y,
               s * p.x - c * p.y,
               -p.theta.rad());
}

Pose2 between(const Pose2& a, const Pose2& b) {
  return compose(inverse(a), b);
}

Mat3Sym Mat3Sym::diagonal(double dxx, double dyy, double dtt) {
  Mat3Sym m;
  m.set(0, 0, dxx);
  m.set(1, 1, dyy);
  m.set(2, 2, dtt);
  return m;
}

int Mat3Sym::index(int r, int c) {
  if (r > c) std::swap(r, c);
  // (0,0)=0 (0,1)=1 (0,2)=2 (1,1)=3 (1,2)=4 (2,2)=5
  static constexpr int kOffset[3] = {0, 2, 3};
  return kOffset[r] + c;
}

bool Mat3Sym::positive_definite() const {
  const Mat3Sym& a = *this;
  const double d1 = a(0, 0);
  const double d2 = a(0, 0) * a(1, 1) - a(0, 1) * a(0, 1);
  const double d3 = a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(1, 2)) -
                    a(0, 1) * (a(0, 1) * a(2, 2) - a(1, 2) * a(0, 2)) +
                    a(0, 2) * (a(0, 1) * a(1, 2) - a(1, 1) * a(0, 2));
  return d1 > 0.0 && d2 > 0.0 && d3 > 0.0;
}

}  // namespace edgebot

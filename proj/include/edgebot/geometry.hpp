#pragma once

// Planar rigid-body geometry, angle arithmetic, and session time.
// Everything here is a pure value type; no shared state anywhere.

#include <array>
#include <cmath>
#include <compare>
#include <cstdint>

namespace edgebot {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

// Wraps an angle to (-pi, pi]. The +pi boundary is kept (never -pi) so
// equality tests have a deterministic tie-break. Throws on non-finite input.
double wrap_angle(double radians);

// A heading stored wrapped at construction time.
class Angle {
 public:
  Angle() = default;
  explicit Angle(double radians) : radians_(wrap_angle(radians)) {}
  double rad() const { return radians_; }
  Angle operator+(Angle o) const { return Angle(radians_ + o.radians_); }
  Angle operator-(Angle o) const { return Angle(radians_ - o.radians_); }
  Angle operator-() const { return Angle(-radians_); }

 private:
  double radians_ = 0.0;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Vec2& a, const Vec2& b) {
  return std::hypot(b.x - a.x, b.y - a.y);
}

// SE(2) pose: position in meters, heading wrapped to (-pi, pi].
struct Pose2 {
  Pose2() = default;
  Pose2(double x_, double y_, double theta_rad);

  double x = 0.0;
  double y = 0.0;
  Angle theta;

  Vec2 position() const { return {x, y}; }
};

Pose2 compose(const Pose2& a, const Pose2& b);
Pose2 inverse(const Pose2& p);
// Relative pose: between(a, b) = inverse(a) * b, so compose(a, between(a, b)) == b.
Pose2 between(const Pose2& a, const Pose2& b);

// Microseconds since session start.
struct Timestamp {
  uint64_t micros = 0;

  static Timestamp from_seconds(double s) {
    return Timestamp{static_cast<uint64_t>(s * 1e6 + 0.5)};
  }
  double seconds() const { return static_cast<double>(micros) * 1e-6; }
  auto operator<=>(const Timestamp&) const = default;
};

// 3x3 symmetric matrix over (x, y, theta); information or covariance weights.
class Mat3Sym {
 public:
  Mat3Sym() = default;  // zero matrix
  static Mat3Sym diagonal(double dxx, double dyy, double dtt);

  double operator()(int r, int c) const { return m_[index(r, c)]; }
  void set(int r, int c, double v) { m_[index(r, c)] = v; }

  // Sylvester's criterion on the leading principal minors.
  bool positive_definite() const;

 private:
  static int index(int r, int c);
  std::array<double, 6> m_{};  // packed upper triangle: 00 01 02 11 12 22
};

}  // namespace edgebot

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "edgebot/geometry.hpp"
#include "oracles.hpp"

using namespace edgebot;

namespace {

void check_pose(const Pose2& got, double x, double y, double theta,
                double tol = 1e-12) {
  CHECK(std::abs(got.x - x) < tol);
  CHECK(std::abs(got.y - y) < tol);
  CHECK(std::abs(wrap_angle(got.theta.rad() - theta)) < tol);
}

std::mt19937_64 rng(42);

Pose2 random_pose() {
  std::uniform_real_distribution<double> pos(-10.0, 10.0);
  std::uniform_real_distribution<double> ang(-10.0, 10.0);
  return Pose2(pos(rng), pos(rng), ang(rng));
}

}  // namespace

TEST_CASE("wrap_angle examples") {
  CHECK(wrap_angle(0.0) == 0.0);
  CHECK(wrap_angle(3.0 * kPi) == doctest::Approx(kPi).epsilon(1e-15));
  // derived via the mod-arithmetic oracle
  CHECK(wrap_angle(-1.5 * kPi) ==
        doctest::Approx(oracle::wrap(-1.5 * kPi)).epsilon(1e-15));
  CHECK(wrap_angle(-1.5 * kPi) == doctest::Approx(kPi / 2.0).epsilon(1e-15));
  // boundary convention: +pi kept, -pi maps to +pi
  CHECK(wrap_angle(kPi) == kPi);
  CHECK(wrap_angle(-kPi) == kPi);
  CHECK_THROWS_AS(wrap_angle(std::numeric_limits<double>::infinity()),
                  std::invalid_argument);
  CHECK_THROWS_AS(wrap_angle(std::nan("")), std::invalid_argument);
}

TEST_CASE("wrap_angle idempotence and periodicity") {
  std::uniform_real_distribution<double> dist(-50.0, 50.0);
  for (int k = 0; k < 10000; ++k) {
    const double a = dist(rng);
    const double w = wrap_angle(a);
    CHECK(w > -kPi);
    CHECK(w <= kPi);
    CHECK(wrap_angle(w) == w);  // exact idempotence
    CHECK(std::abs(wrap_angle(a + 2.0 * kPi) - w) < 1e-9);
    // congruence mod 2pi
    CHECK(std::abs(oracle::wrap(w - a)) < 1e-9);
  }
}

TEST_CASE("compose examples") {
  const Pose2 id;
  const Pose2 p(1.5, -2.0, 0.7);
  check_pose(compose(id, p), p.x, p.y, p.theta.rad());

  const Pose2 round = compose(p, inverse(p));
  check_pose(round, 0.0, 0.0, 0.0, 1e-12);

  // derived with the homogeneous-matrix oracle
  const Pose2 got = compose(Pose2(1, 0, kPi / 2), Pose2(1, 0, 0));
  const oracle::Se2 want = oracle::compose({1, 0, kPi / 2}, {1, 0, 0});
  check_pose(got, want.x, want.y, want.theta, 1e-12);
  check_pose(got, 1.0, 1.0, kPi / 2, 1e-12);
}

TEST_CASE("inverse examples") {
  check_pose(inverse(Pose2()), 0, 0, 0);
  check_pose(inverse(Pose2(1, 0, 0)), -1, 0, 0);
  const Pose2 got = inverse(Pose2(1, 2, kPi / 2));
  const oracle::Se2 want = oracle::inverse({1, 2, kPi / 2});
  check_pose(got, want.x, want.y, want.theta, 1e-12);
  check_pose(got, -2, 1, -kPi / 2, 1e-12);
}

TEST_CASE("between examples") {
  const Pose2 p(3, -1, 1.2);
  check_pose(between(p, p), 0, 0, 0, 1e-12);
  check_pose(between(Pose2(), p), p.x, p.y, p.theta.rad(), 1e-12);
  const Pose2 got = between(Pose2(1, 1, kPi / 2), Pose2(1, 2, kPi / 2));
  check_pose(got, 1, 0, 0, 1e-12);
}

TEST_CASE("SE(2) group laws on random poses") {
  for (int k = 0; k < 10000; ++k) {
    const Pose2 a = random_pose();
    const Pose2 b = random_pose();
    const Pose2 c = random_pose();

    const Pose2 ab_c = compose(compose(a, b), c);
    const Pose2 a_bc = compose(a, compose(b, c));
    CHECK(std::abs(ab_c.x - a_bc.x) < 1e-10);
    CHECK(std::abs(ab_c.y - a_bc.y) < 1e-10);
    CHECK(std::abs(wrap_angle(ab_c.theta.rad() - a_bc.theta.rad())) < 1e-10);

    const Pose2 round = compose(a, between(a, b));
    CHECK(std::abs(round.x - b.x) < 1e-10);
    CHECK(std::abs(round.y - b.y) < 1e-10);
    CHECK(std::abs(wrap_angle(round.theta.rad() - b.theta.rad())) < 1e-10);

    // cross-check against the matrix oracle
    const oracle::Se2 want =
        oracle::compose({a.x, a.y, a.theta.rad()}, {b.x, b.y, b.theta.rad()});
    const Pose2 got = compose(a, b);
    CHECK(std::abs(got.x - want.x) < 1e-10);
    CHECK(std::abs(got.y - want.y) < 1e-10);
    CHECK(std::abs(wrap_angle(got.theta.rad() - want.theta)) < 1e-10);
  }
}

TEST_CASE("pose construction validates and wraps") {
  CHECK_THROWS_AS(Pose2(std::nan(""), 0, 0), std::invalid_argument);
  const Pose2 p(0, 0, 5.0 * kPi);  // wrapped at construction
  CHECK(p.theta.rad() == doctest::Approx(kPi).epsilon(1e-15));
}

TEST_CASE("Mat3Sym positive definiteness") {
  CHECK(Mat3Sym::diagonal(1, 2, 3).positive_definite());
  CHECK_FALSE(Mat3Sym::diagonal(1, -2, 3).positive_definite());
  CHECK_FALSE(Mat3Sym().positive_definite());
  Mat3Sym m = Mat3Sym::diagonal(1, 1, 1);
  m.set(0, 1, 0.5);
  CHECK(m(1, 0) == 0.5);  // symmetric storage
  CHECK(m.positive_definite());
  m.set(0, 1, 1.5);
  CHECK_FALSE(m.positive_definite());
}

TEST_CASE("timestamp ordering and conversion") {
  CHECK(Timestamp::from_seconds(1.5).micros == 1500000);
  CHECK(Timestamp{3}.seconds() == doctest::Approx(3e-6));
  CHECK(Timestamp{1} < Timestamp{2});
}

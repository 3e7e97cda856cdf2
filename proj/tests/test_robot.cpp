#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "edgebot/robot.hpp"

using namespace edgebot;
using namespace edgebot::robot;

namespace {

std::vector<uint8_t> frame_bytes(wire::FrameKind kind, uint32_t seq) {
  wire::Frame f;
  f.seq = seq;
  switch (kind) {
    case wire::FrameKind::ImuBatch:
      f.payload = wire::ImuBatchPayload{{{10000, 10, 0}}};
      break;
    case wire::FrameKind::Rtt:
      f.payload = wire::RttPayload{0, 1000};
      break;
    default:
      f.payload = wire::HeartbeatPayload{};
      break;
  }
  return wire::encode_frame(f);
}

// Transport that accepts nothing: everything stays queued.
struct BlackholeStream : net::ByteStream {
  size_t send(std::span<const uint8_t>) override { return 0; }
  size_t recv(std::span<uint8_t>) override { return 0; }
  void close_send() override {}
  bool recv_closed() override { return true; }
};

sim::Scenario small_scenario(double leg = 2.0, int aps = 2) {
  sim::ScenarioConfig c;
  c.area_w = 10;
  c.area_h = 5;
  c.waypoints = {{1, 1}, {1 + leg, 1}};
  c.speed = 1.0;
  c.imu_rate = 100;
  c.rtt_rate = 5;
  for (int k = 0; k < aps; ++k) c.aps.push_back({0.5 + k, 0.5});
  return sim::build_scenario(c);
}

struct Streams {
  sim::GroundTruthTrajectory gt;
  std::vector<sim::OdometrySample> odometry;
  std::vector<sim::RttSample> rtt;
};

Streams make_streams(const sim::Scenario& s, uint64_t seed = 0) {
  Streams out;
  out.gt = sim::sample_ground_truth(s);
  out.odometry = sim::synthesize_imu(out.gt, s.cfg.imu_noise, seed);
  out.rtt = sim::synthesize_rtt(out.gt, s, s.cfg.rtt_noise, seed);
  return out;
}

}  // namespace

TEST_CASE("tx buffer drop policy") {
  SUBCASE("non-full buffer always enqueues") {
    TxBuffer buf(4);
    CHECK(!buf.enqueue(wire::FrameKind::ImuBatch, frame_bytes(wire::FrameKind::ImuBatch, 0)));
    CHECK(!buf.enqueue(wire::FrameKind::Rtt, frame_bytes(wire::FrameKind::Rtt, 1)));
    CHECK(buf.size() == 2);
  }

  SUBCASE("full of imu, new rtt evicts the oldest imu") {
    TxBuffer buf(2);
    buf.enqueue(wire::FrameKind::ImuBatch, frame_bytes(wire::FrameKind::ImuBatch, 0));
    buf.enqueue(wire::FrameKind::ImuBatch, frame_bytes(wire::FrameKind::ImuBatch, 1));
    const auto dropped =
        buf.enqueue(wire::FrameKind::Rtt, frame_bytes(wire::FrameKind::Rtt, 2));
    REQUIRE(dropped.has_value());
    CHECK(*dropped == wire::FrameKind::ImuBatch);
    CHECK(buf.size() == 2);
  }

  SUBCASE("full of rtt, new imu is itself dropped") {
    TxBuffer buf(2);
    buf.enqueue(wire::FrameKind::Rtt, frame_bytes(wire::FrameKind::Rtt, 0));
    buf.enqueue(wire::FrameKind::Rtt, frame_bytes(wire::FrameKind::Rtt, 1));
    const auto dropped = buf.enqueue(wire::FrameKind::ImuBatch,
                                     frame_bytes(wire::FrameKind::ImuBatch, 2));
    REQUIRE(dropped.has_value());
    CHECK(*dropped == wire::FrameKind::ImuBatch);
    CHECK(buf.size() == 2);
  }

  SUBCASE("full of rtt, new rtt is dropped too") {
    TxBuffer buf(1);
    buf.enqueue(wire::FrameKind::Rtt, frame_bytes(wire::FrameKind::Rtt, 0));
    const auto dropped =
        buf.enqueue(wire::FrameKind::Rtt, frame_bytes(wire::FrameKind::Rtt, 1));
    REQUIRE(dropped.has_value());
    CHECK(*dropped == wire::FrameKind::Rtt);
  }

  SUBCASE("mixed buffer protects rtt while any imu is queued") {
    TxBuffer buf(3);
    buf.enqueue(wire::FrameKind::Rtt, frame_bytes(wire::FrameKind::Rtt, 0));
    buf.enqueue(wire::FrameKind::ImuBatch, frame_bytes(wire::FrameKind::ImuBatch, 1));
    buf.enqueue(wire::FrameKind::Rtt, frame_bytes(wire::FrameKind::Rtt, 2));
    const auto dropped =
        buf.enqueue(wire::FrameKind::Rtt, frame_bytes(wire::FrameKind::Rtt, 3));
    REQUIRE(dropped.has_value());
    CHECK(*dropped == wire::FrameKind::ImuBatch);
  }
}

TEST_CASE("one second of exp1-rate streams, unbounded buffer") {
  // 1 s at 100 Hz IMU (batch 20) and 5 Hz RTT with 2 APs, no noise, no drops
  sim::Scenario s = small_scenario(1.0, 2);
  auto streams = make_streams(s);
  REQUIRE(streams.odometry.size() == 100);

  RobotConfig cfg;
  cfg.tx_buffer_frames = 100000;
  cfg.imu_batch = 20;
  cfg.heartbeat_period_s = 1.0;
  RobotSession session(s, streams.odometry, streams.rtt, cfg);
  auto [a, b] = net::make_loopback_pair();
  const auto stats = session.run(*a);

  CHECK(stats.sent_imu == 5);            // 100 ticks / batch 20
  CHECK(stats.sent_rtt == streams.rtt.size());
  CHECK(stats.sent_rtt == 5 * 2);        // 5 epochs x 2 APs (zero dropout)
  CHECK(stats.sent_heartbeat >= 2);      // start + final
  CHECK(stats.dropped_imu == 0);
  CHECK(stats.dropped_rtt == 0);
  CHECK(!stats.aborted);
}

TEST_CASE("empty streams terminate cleanly with only heartbeats") {
  sim::Scenario s = small_scenario();
  RobotSession session(s, {}, {}, RobotConfig{});
  auto [a, b] = net::make_loopback_pair();
  const auto stats = session.run(*a);
  CHECK(stats.sent_imu == 0);
  CHECK(stats.sent_rtt == 0);
  CHECK(stats.sent_heartbeat == 1);  // the final heartbeat
  CHECK(!stats.aborted);
}

TEST_CASE("conservation: every generated frame is sent or counted dropped") {
  sim::Scenario s = small_scenario(4.0, 3);
  auto streams = make_streams(s, 5);

  RobotConfig cfg;
  cfg.tx_buffer_frames = 64;
  cfg.imu_batch = 1;  // 100 frames/s: the stall must overflow the buffer
  RobotSession session(s, streams.odometry, streams.rtt, cfg);
  auto [a, b] = net::make_loopback_pair(net::StallWindow{1000000, 2500000});
  const auto stats = session.run(*a);

  CHECK(stats.dropped_imu > 0);
  CHECK(stats.dropped_rtt == 0);
  CHECK(stats.generated_imu == stats.sent_imu + stats.dropped_imu);
  CHECK(stats.generated_rtt == stats.sent_rtt + stats.dropped_rtt);
  CHECK(stats.generated_heartbeat ==
        stats.sent_heartbeat + stats.dropped_heartbeat);

  // received frames decode cleanly and are timestamp-ordered per kind
  wire::FrameReader reader;
  uint8_t buf[4096];
  uint64_t last_imu = 0, last_rtt = 0;
  size_t frames = 0;
  while (true) {
    const size_t n = b->recv(std::span<uint8_t>(buf, sizeof(buf)));
    if (n == 0) break;
    reader.push(std::span<const uint8_t>(buf, n));
    while (auto outcome = reader.next()) {
      REQUIRE(std::holds_alternative<wire::Frame>(*outcome));
      const auto& f = std::get<wire::Frame>(*outcome);
      ++frames;
      if (f.kind() == wire::FrameKind::ImuBatch) {
        CHECK(f.timestamp_us >= last_imu);
        last_imu = f.timestamp_us;
      } else if (f.kind() == wire::FrameKind::Rtt) {
        CHECK(f.timestamp_us >= last_rtt);
        last_rtt = f.timestamp_us;
      }
    }
  }
  CHECK(frames == stats.sent_total());
}

TEST_CASE("closed-loop drive follows commands") {
  SUBCASE("1 m/s for 500 ms from rest covers 0.5 m along heading") {
    ClosedLoopDrive drive;
    drive.pose = Pose2(2, 3, 0);
    wire::CommandPayload cmd;
    cmd.v_mmps = 1000;
    cmd.omega_urad_ps = 0;
    cmd.duration_ms = 500;
    drive.apply(cmd, 0);
    for (uint64_t k = 1; k <= 100; ++k) drive.step(k * 10000, 0.01);
    CHECK(std::abs(drive.pose.x - 2.5) < 1e-6);
    CHECK(std::abs(drive.pose.y - 3.0) < 1e-6);
    CHECK(drive.v == 0.0);  // halted after the deadline
  }

  SUBCASE("zero command halts the robot") {
    ClosedLoopDrive drive;
    drive.pose = Pose2(0, 0, 0);
    wire::CommandPayload go;
    go.v_mmps = 1000;
    go.duration_ms = 60000;
    drive.apply(go, 0);
    drive.step(10000, 0.01);
    CHECK(drive.pose.x > 0.0);
    wire::CommandPayload halt;
    halt.duration_ms = 1000;
    drive.apply(halt, 10000);
    const double x = drive.pose.x;
    drive.step(20000, 0.01);
    CHECK(drive.pose.x == x);
  }
}

TEST_CASE("command log preserves order and counts") {
  sim::Scenario s = small_scenario(1.0, 1);
  auto streams = make_streams(s);
  RobotSession session(s, streams.odometry, streams.rtt, RobotConfig{});

  auto [robot_end, edge_end] = net::make_loopback_pair();
  // preload two commands "from the edge"
  for (uint32_t k = 0; k < 2; ++k) {
    wire::Frame f;
    f.seq = k;
    f.timestamp_us = 1000 * k;
    f.payload = wire::CommandPayload{100, 0, 100};
    const auto bytes = wire::encode_frame(f);
    edge_end->send(std::span<const uint8_t>(bytes.data(), bytes.size()));
  }
  const auto stats = session.run(*robot_end);
  CHECK(stats.commands_received == 2);
  REQUIRE(session.command_log().size() == 2);
  CHECK(session.command_log()[0].t <= session.command_log()[1].t);
}

TEST_CASE("transport failure aborts with partial stats") {
  struct FailingStream : net::ByteStream {
    size_t send(std::span<const uint8_t>) override {
      throw std::runtime_error("wire cut");
    }
    size_t recv(std::span<uint8_t>) override { return 0; }
    void close_send() override {}
    bool recv_closed() override { return true; }
  } failing;

  sim::Scenario s = small_scenario(1.0, 1);
  auto streams = make_streams(s);
  RobotSession session(s, streams.odometry, streams.rtt, RobotConfig{});
  const auto stats = session.run(failing);
  CHECK(stats.aborted);
  CHECK(stats.error == "wire cut");
}

TEST_CASE("blackhole transport: everything drains to virtual-time cap") {
  sim::Scenario s = small_scenario(1.0, 1);
  auto streams = make_streams(s);
  RobotConfig cfg;
  cfg.tx_buffer_frames = 4;
  cfg.imu_batch = 5;
  RobotSession session(s, streams.odometry, streams.rtt, cfg);
  BlackholeStream hole;
  const auto stats = session.run(hole);
  CHECK(!stats.aborted);
  CHECK(stats.dropped_imu > 0);
}

#include "edgebot/robot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace edgebot::robot {

namespace {

constexpr uint64_t kDrainGuardTicks = 1000000;  // virtual drain cap

wire::ImuSampleFx to_fx(const sim::OdometrySample& od, uint64_t prev_t_us) {
  return {static_cast<uint32_t>(od.t.micros - prev_t_us), wire::to_mm(od.dd),
          wire::to_urad(od.dtheta)};
}

}  // namespace

std::string SessionStats::summary() const {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "generated_imu=%llu\ngenerated_rtt=%llu\n"
                "generated_heartbeat=%llu\nsent_imu=%llu\nsent_rtt=%llu\n"
                "sent_heartbeat=%llu\ndropped_imu=%llu\ndropped_rtt=%llu\n"
                "dropped_heartbeat=%llu\ncommands_received=%llu\naborted=%d\n",
                (unsigned long long)generated_imu, (unsigned long long)generated_rtt,
                (unsigned long long)generated_heartbeat, (unsigned long long)sent_imu,
                (unsigned long long)sent_rtt, (unsigned long long)sent_heartbeat,
                (unsigned long long)dropped_imu, (unsigned long long)dropped_rtt,
                (unsigned long long)dropped_heartbeat,
                (unsigned long long)commands_received, aborted ? 1 : 0);
  std::string out(buf);
  if (!error.empty()) out += "error=" + error + "\n";
  return out;
}

std::optional<wire::FrameKind> TxBuffer::enqueue(wire::FrameKind kind,
                                                 std::vector<uint8_t> bytes) {
  std::optional<wire::FrameKind> dropped;
  if (entries_.size() >= capacity_) {
    // Evict the oldest queued ImuBatch; skip the head if its bytes are
    // already partially on the wire.
    size_t evict = entries_.size();
    for (size_t k = 0; k < entries_.size(); ++k) {
      if (entries_[k].kind == wire::FrameKind::ImuBatch &&
          !(k == 0 && entries_[k].offset > 0)) {
        evict = k;
        break;
      }
    }
    if (evict < entries_.size()) {
      entries_.erase(entries_.begin() + static_cast<long>(evict));
      dropped = wire::FrameKind::ImuBatch;
    } else {
      return kind;  // buffer holds no evictable ImuBatch: drop the new frame
    }
  }
  entries_.push_back({kind, std::move(bytes), 0});
  return dropped;
}

size_t TxBuffer::pump(net::ByteStream& out) {
  size_t completed = 0;
  while (!entries_.empty()) {
    Entry& head = entries_.front();
    const size_t n = out.send(std::span<const uint8_t>(
        head.bytes.data() + head.offset, head.bytes.size() - head.offset));
    head.offset += n;
    if (head.offset < head.bytes.size()) break;  // transport is full
    ++completed;
    sent_kinds_.push_back(head.kind);
    entries_.pop_front();
  }
  return completed;
}

std::vector<wire::FrameKind> TxBuffer::drain_remaining() {
  std::vector<wire::FrameKind> kinds;
  for (const auto& e : entries_) kinds.push_back(e.kind);
  entries_.clear();
  return kinds;
}

RobotSession::RobotSession(const sim::Scenario& scenario,
                           std::vector<sim::OdometrySample> odometry,
                           std::vector<sim::RttSample> rtt, RobotConfig cfg)
    : scenario_(scenario),
      cfg_(cfg),
      odometry_(std::move(odometry)),
      rtt_(std::move(rtt)),
      tx_(std::max<size_t>(1, cfg.tx_buffer_frames)) {
  if (cfg_.imu_batch < 1) throw std::invalid_argument("imu_batch must be >= 1");
}

RobotSession::RobotSession(const sim::Scenario& scenario, Pose2 start,
                           RobotConfig cfg)
    : scenario_(scenario),
      cfg_(cfg),
      start_pose_(start),
      tx_(std::max<size_t>(1, cfg.tx_buffer_frames)) {
  cfg_.closed_loop = true;
  if (cfg_.imu_batch < 1) throw std::invalid_argument("imu_batch must be >= 1");
}

void RobotSession::enqueue_frame(const wire::Frame& f) {
  const wire::FrameKind kind = f.kind();
  switch (kind) {
    case wire::FrameKind::ImuBatch: ++stats_.generated_imu; break;
    case wire::FrameKind::Rtt: ++stats_.generated_rtt; break;
    case wire::FrameKind::Heartbeat: ++stats_.generated_heartbeat; break;
    default: break;
  }
  wire::Frame numbered = f;
  numbered.seq = next_seq_++;  // evicted frames burn their seq: gaps are visible
  if (auto dropped = tx_.enqueue(kind, wire::encode_frame(numbered))) {
    switch (*dropped) {
      case wire::FrameKind::ImuBatch: ++stats_.dropped_imu; break;
      case wire::FrameKind::Rtt: ++stats_.dropped_rtt; break;
      case wire::FrameKind::Heartbeat: ++stats_.dropped_heartbeat; break;
      default: break;
    }
  }
}

void RobotSession::emit_batch() {
  if (batch_.empty()) return;
  wire::Frame f;
  f.timestamp_us = batch_last_t_us_;
  f.payload = wire::ImuBatchPayload{std::move(batch_)};
  batch_.clear();
  enqueue_frame(f);
}

void RobotSession::poll_commands(net::ByteStream& transport, Timestamp now) {
  uint8_t buf[4096];
  while (true) {
    const size_t n = transport.recv(std::span<uint8_t>(buf, sizeof(buf)));
    if (n == 0) break;
    rx_.push(std::span<const uint8_t>(buf, n));
  }
  while (auto outcome = rx_.next()) {
    if (std::holds_alternative<wire::DecodeError>(*outcome)) {
      throw std::runtime_error(
          std::string("corrupt frame from edge: ") +
          std::string(wire::to_string(std::get<wire::DecodeError>(*outcome))));
    }
    const auto& f = std::get<wire::Frame>(*outcome);
    if (f.kind() == wire::FrameKind::Command) {
      const auto& cmd = std::get<wire::CommandPayload>(f.payload);
      log_.push_back({now, cmd});
      ++stats_.commands_received;
      if (cfg_.closed_loop && drive_) drive_->apply(cmd, now.micros);
    }
  }
}

void ClosedLoopDrive::apply(const wire::CommandPayload& cmd, uint64_t now_us) {
  v = wire::from_mm(cmd.v_mmps);
  omega = wire::from_urad(cmd.omega_urad_ps);
  deadline_us = now_us + static_cast<uint64_t>(cmd.duration_ms) * 1000;
}

std::pair<double, double> ClosedLoopDrive::step(uint64_t tick_end_us,
                                                double dt) {
  const uint64_t dt_us = static_cast<uint64_t>(std::llround(dt * 1e6));
  const uint64_t tick_start = tick_end_us >= dt_us ? tick_end_us - dt_us : 0;
  if (tick_start >= deadline_us) {
    v = 0.0;
    omega = 0.0;
  }
  const double dd = v * dt;
  const double dtheta = omega * dt;
  const double mid = pose.theta.rad() + 0.5 * dtheta;
  pose = Pose2(pose.x + dd * std::cos(mid), pose.y + dd * std::sin(mid),
               pose.theta.rad() + dtheta);
  return {dd, dtheta};
}

SessionStats RobotSession::run(net::ByteStream& transport,
                               const std::function<void()>& on_tick) {
  stats_ = SessionStats{};
  const uint64_t tick_us = scenario_.tick_us;
  const double dt = static_cast<double>(tick_us) * 1e-6;
  const uint64_t hb_period_us =
      static_cast<uint64_t>(cfg_.heartbeat_period_s * 1e6);

  uint64_t n_ticks = 0;
  if (cfg_.closed_loop) {
    drive_ = ClosedLoopDrive{start_pose_};
    if (cfg_.closed_loop_duration_s > 0) {
      n_ticks = static_cast<uint64_t>(cfg_.closed_loop_duration_s * 1e6) / tick_us;
    } else {
      n_ticks = sim::sample_ground_truth(scenario_).samples.size() - 1;
    }
    driven_.clear();
    driven_.push_back({Timestamp{0}, start_pose_});
  } else {
    n_ticks = odometry_.size();
  }

  std::optional<sim::ImuNoiseSynth> imu_synth;
  std::optional<sim::RttNoiseSynth> rtt_synth;
  if (cfg_.closed_loop) {
    imu_synth.emplace(scenario_.cfg.imu_noise, scenario_.cfg.seed, dt);
    rtt_synth.emplace(scenario_.cfg.rtt_noise, scenario_.cfg.seed);
  }

  uint64_t end_t = 0;
  try {
    uint64_t next_hb = 0;  // heartbeat at session start, then periodic
    uint64_t prev_sample_t = 0;
    size_t rtt_idx = 0;

    for (uint64_t k = 1; k <= n_ticks; ++k) {
      const uint64_t t = k * tick_us;

      if (hb_period_us > 0 && t >= next_hb) {
        wire::Frame hb;
        hb.timestamp_us = next_hb;
        hb.payload = wire::HeartbeatPayload{};
        enqueue_frame(hb);
        next_hb += hb_period_us;
      }

      sim::OdometrySample od;
      if (cfg_.closed_loop) {
        const auto [dd, dth] = drive_->step(t, dt);
        od = imu_synth->corrupt(Timestamp{t}, dd, dth);
        driven_.push_back({Timestamp{t}, drive_->pose});
      } else {
        od = odometry_[k - 1];
      }
      batch_.push_back(to_fx(od, prev_sample_t));
      prev_sample_t = od.t.micros;
      batch_last_t_us_ = od.t.micros;
      if (batch_.size() >= static_cast<size_t>(cfg_.imu_batch)) emit_batch();

      if (cfg_.closed_loop) {
        if (k % static_cast<uint64_t>(scenario_.ticks_per_epoch) == 0) {
          for (size_t ap = 0; ap < scenario_.cfg.aps.size(); ++ap) {
            const double true_range =
                distance(drive_->pose.position(), scenario_.cfg.aps[ap]);
            if (auto r = rtt_synth->sample(true_range)) {
              wire::Frame f;
              f.timestamp_us = t;
              f.payload = wire::RttPayload{static_cast<uint8_t>(ap),
                                           static_cast<uint32_t>(std::max(
                                               0l, std::lround(*r * 1000.0)))};
              enqueue_frame(f);
            }
          }
        }
      } else {
        while (rtt_idx < rtt_.size() && rtt_[rtt_idx].t.micros <= t) {
          const auto& s = rtt_[rtt_idx++];
          wire::Frame f;
          f.timestamp_us = s.t.micros;
          f.payload = wire::RttPayload{
              s.ap_id,
              static_cast<uint32_t>(std::max(0l, std::lround(s.range * 1000.0)))};
          enqueue_frame(f);
        }
      }

      transport.advance_to(t);
      tx_.pump(transport);
      poll_commands(transport, Timestamp{t});
      if (on_tick) on_tick();
      end_t = t;
    }

    emit_batch();  // flush a partial batch
    wire::Frame hb;
    hb.timestamp_us = end_t;
    hb.payload = wire::HeartbeatPayload{};
    enqueue_frame(hb);

    // Drain on virtual time so a finite stall window always clears.
    uint64_t vt = end_t;
    for (uint64_t guard = 0; !tx_.empty() && guard < kDrainGuardTicks; ++guard) {
      vt += tick_us;
      transport.advance_to(vt);
      tx_.pump(transport);
      poll_commands(transport, Timestamp{end_t});
      if (on_tick) on_tick();
    }
    transport.close_send();
  } catch (const std::exception& ex) {
    stats_.aborted = true;
    stats_.error = ex.what();
  }

  for (auto kind : tx_.drain_remaining()) {
    switch (kind) {
      case wire::FrameKind::ImuBatch: ++stats_.dropped_imu; break;
      case wire::FrameKind::Rtt: ++stats_.dropped_rtt; break;
      case wire::FrameKind::Heartbeat: ++stats_.dropped_heartbeat; break;
      default: break;
    }
  }

  for (auto kind : tx_.take_sent_kinds()) {
    switch (kind) {
      case wire::FrameKind::ImuBatch: ++stats_.sent_imu; break;
      case wire::FrameKind::Rtt: ++stats_.sent_rtt; break;
      case wire::FrameKind::Heartbeat: ++stats_.sent_heartbeat; break;
      default: break;
    }
  }
  return stats_;
}

}  // namespace edgebot::robot

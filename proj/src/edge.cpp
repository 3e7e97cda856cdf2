#include "edgebot/edge.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace edgebot::edge {

wire::CommandPayload plan_command(const Pose2& estimate, Mission& mission,
                                  const PlannerConfig& cfg,
                                  uint16_t duration_ms) {
  if (mission.done()) {
    throw std::logic_error("plan_command: no waypoints remain");
  }
  const Vec2& target = mission.waypoints[mission.next];
  const double dist = distance(estimate.position(), target);

  wire::CommandPayload cmd;
  cmd.duration_ms = duration_ms;
  if (dist <= cfg.capture_radius) {
    ++mission.next;  // waypoint reached; stop for this period
    return cmd;
  }

  const double bearing = std::atan2(target.y - estimate.y, target.x - estimate.x);
  const double err = wrap_angle(bearing - estimate.theta.rad());
  const double omega = std::clamp(cfg.k_omega * err, -cfg.omega_max, cfg.omega_max);
  double v = std::clamp(cfg.k_v * dist, 0.0, cfg.v_max);
  if (std::abs(err) >= kPi / 2.0) v = 0.0;  // turn in place first

  cmd.v_mmps = wire::to_mm(v);
  cmd.omega_urad_ps = wire::to_urad(omega);
  return cmd;
}

EdgePipeline::EdgePipeline(PipelineConfig cfg)
    : cfg_(cfg),
      detector_(cfg.loop),
      mission_{cfg.waypoints, 0},
      next_command_us_(static_cast<uint64_t>(cfg.scheduler.command_period_ms) *
                       1000) {
  est::KeyframeNode anchor;
  anchor.id = 0;
  anchor.pose = cfg_.start_pose;
  anchor.fingerprint.ranges.assign(cfg_.num_aps, std::nullopt);
  anchor.t = Timestamp{0};
  graph_.nodes.push_back(std::move(anchor));
  graph_.anchor_id = 0;
  last_solve_ = est::SolveStats{};
}

EdgePipeline::EpochAcc& EdgePipeline::acc_for(uint64_t epoch) {
  auto [it, inserted] = open_epochs_.try_emplace(epoch);
  if (inserted) {
    it->second.fp.assign(cfg_.num_aps, std::nullopt);
  }
  return it->second;
}

void EdgePipeline::on_frame(const wire::Frame& f) {
  ++counters_.frames;
  if (last_seq_ && f.seq <= *last_seq_) {
    ++counters_.duplicates;
    return;
  }
  if (last_seq_ && f.seq > *last_seq_ + 1) {
    counters_.seq_gaps += f.seq - *last_seq_ - 1;
  }
  last_seq_ = f.seq;

  switch (f.kind()) {
    case wire::FrameKind::ImuBatch: {
      const auto& batch = std::get<wire::ImuBatchPayload>(f.payload);
      // Sample times run backward from the frame timestamp (the last sample).
      std::vector<uint64_t> times(batch.samples.size());
      uint64_t t = f.timestamp_us;
      for (size_t k = batch.samples.size(); k-- > 0;) {
        times[k] = t;
        t -= std::min<uint64_t>(t, batch.samples[k].dt_us);
      }
      for (size_t k = 0; k < batch.samples.size(); ++k) {
        const auto& s = batch.samples[k];
        on_odometry(Timestamp{times[k]}, wire::from_mm(s.dd_mm),
                    wire::from_urad(s.dtheta_urad));
      }
      break;
    }
    case wire::FrameKind::Rtt: {
      const auto& rtt = std::get<wire::RttPayload>(f.payload);
      on_rtt(Timestamp{f.timestamp_us}, rtt.ap_id, rtt.range_mm * 1e-3);
      break;
    }
    case wire::FrameKind::Heartbeat:
      on_heartbeat(Timestamp{f.timestamp_us});
      break;
    default:
      ++counters_.unexpected;
      break;
  }
}

void EdgePipeline::on_odometry(Timestamp t, double dd, double dtheta) {
  ++counters_.odom_samples;
  acc_for(epoch_of(t.micros))
      .odom.add(dd, dtheta, static_cast<double>(cfg_.tick_us) * 1e-6);
  advance_stream_time(t.micros);
}

void EdgePipeline::on_rtt(Timestamp t, uint8_t ap_id, double range) {
  ++counters_.rtt_samples;
  auto& acc = acc_for(epoch_of(t.micros));
  if (ap_id < acc.fp.size()) {
    acc.fp[ap_id] = range;  // latest measurement within the window wins
  }
  advance_stream_time(t.micros);
}

void EdgePipeline::on_heartbeat(Timestamp t) {
  ++counters_.heartbeats;
  advance_stream_time(t.micros);
}

void EdgePipeline::advance_stream_time(uint64_t t_us) {
  stream_time_us_ = std::max(stream_time_us_, t_us);
  if (cfg_.scheduler.keyframe_on_rtt_epoch) {
    // An epoch is complete once the stream moved strictly past its end.
    while (next_epoch_to_close_ * cfg_.epoch_us < stream_time_us_) {
      close_epoch(next_epoch_to_close_);
    }
  }
  plan_due_commands();
}

void EdgePipeline::close_epoch(uint64_t epoch) {
  EpochAcc acc;
  if (auto it = open_epochs_.find(epoch); it != open_epochs_.end()) {
    acc = std::move(it->second);
    open_epochs_.erase(it);
  } else {
    acc.fp.assign(cfg_.num_aps, std::nullopt);
  }
  const double nominal_s = static_cast<double>(cfg_.epoch_us) * 1e-6;
  const double missing_s = std::max(0.0, nominal_s - acc.odom.duration);

  est::Fingerprint fp;
  fp.ranges = std::move(acc.fp);
  fp.t = Timestamp{epoch * cfg_.epoch_us};

  auto [node, edge] =
      est::make_keyframe(graph_.nodes.back(), acc.odom, std::move(fp),
                         Timestamp{epoch * cfg_.epoch_us}, missing_s,
                         nominal_s, cfg_.cov);
  graph_.nodes.push_back(std::move(node));
  graph_.odom_edges.push_back(edge);
  ++keyframe_count_;
  ++keyframes_since_solve_;
  next_epoch_to_close_ = epoch + 1;

  if (cfg_.online) {
    auto accepted = detector_.add_node(graph_.nodes);
    graph_.loop_edges.insert(graph_.loop_edges.end(), accepted.begin(),
                             accepted.end());
    if (keyframes_since_solve_ >= cfg_.scheduler.solve_every_k) {
      run_solver(false);
    }
  }
}

void EdgePipeline::run_solver(bool final_pass) {
  if (!cfg_.online) return;
  if (keyframes_since_solve_ == 0 && !final_pass) return;
  keyframes_since_solve_ = 0;
  SolveLogEntry entry;
  entry.t_us = stream_time_us_;
  entry.keyframes = keyframe_count_;
  try {
    entry.stats = est::optimize(graph_, cfg_.solver);
  } catch (const est::SolverDiverged& ex) {
    entry.stats = ex.stats;
    entry.diverged = true;
  }
  last_solve_ = entry.stats;
  solve_log_.push_back(std::move(entry));
}

void EdgePipeline::plan_due_commands() {
  if (mission_.waypoints.empty()) return;
  while (!mission_.done() && stream_time_us_ >= next_command_us_) {
    const auto cmd =
        plan_command(estimate().latest, mission_, cfg_.planner,
                     static_cast<uint16_t>(cfg_.scheduler.command_period_ms));
    wire::Frame f;
    f.seq = out_seq_++;
    f.timestamp_us = next_command_us_;
    f.payload = cmd;
    outgoing_.push_back(std::move(f));
    next_command_us_ +=
        static_cast<uint64_t>(cfg_.scheduler.command_period_ms) * 1000;
  }
}

void EdgePipeline::finish() {
  if (cfg_.scheduler.keyframe_on_rtt_epoch) {
    while (next_epoch_to_close_ * cfg_.epoch_us <= stream_time_us_) {
      close_epoch(next_epoch_to_close_);
    }
  }
  if (cfg_.online) run_solver(true);
}

std::vector<wire::Frame> EdgePipeline::take_outgoing() {
  return std::move(outgoing_);
}

EstimateState EdgePipeline::estimate() const {
  EstimateState st;
  st.keyframe_count = keyframe_count_;
  st.last_solve = last_solve_;
  Pose2 latest = graph_.nodes.back().pose;
  for (const auto& [epoch, acc] : open_epochs_) {
    latest = compose(latest, acc.odom.delta);
  }
  st.latest = latest;
  return st;
}

std::vector<sim::TimedPose> EdgePipeline::trajectory() const {
  std::vector<sim::TimedPose> out;
  out.reserve(graph_.nodes.size());
  for (const auto& n : graph_.nodes) {
    out.push_back({n.t, n.pose});
  }
  return out;
}

void BoundedFrameQueue::push(wire::Frame f) {
  std::unique_lock<std::mutex> lock(mu_);
  cv_.wait(lock, [this] { return q_.size() < capacity_ || closed_; });
  if (closed_) return;
  q_.push_back(std::move(f));
  cv_.notify_all();
}

std::optional<wire::Frame> BoundedFrameQueue::pop() {
  std::unique_lock<std::mutex> lock(mu_);
  cv_.wait(lock, [this] { return !q_.empty() || closed_; });
  if (q_.empty()) return std::nullopt;
  wire::Frame f = std::move(q_.front());
  q_.pop_front();
  cv_.notify_all();
  return f;
}

void BoundedFrameQueue::close() {
  std::lock_guard<std::mutex> lock(mu_);
  closed_ = true;
  cv_.notify_all();
}

}  // namespace edgebot::edge

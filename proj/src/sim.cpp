#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <thread>

#include "ember/sim.hpp"

namespace ember {

using nlohmann::json;

namespace {

struct Agent {
  UavInit init;
  Vec2 pos;
  double psi = 0.0;
  double speed = 0.0;
  Vec2 vel;
  Vec2 est;
  bool gnss_ok = true;
  double dr_elapsed = 0.0;
  UavState last_good;
  std::unique_ptr<PerceptionPipeline> pipe;
  Rng gps_rng;
  std::optional<GuidancePolyline> poly;
  std::map<int, GuidanceMessage> last_from;
  std::map<int, GuidanceMessage> prev_from;
  double battery = 1.0;
  MissionState mission = MissionState::Nominal;
  bool collision = false;
  bool handover_done = false;
  CommandSource source = CommandSource::Loiter;

  Camera true_cam;
  Camera est_cam;
  Grid<std::uint16_t> thermal;
  std::optional<Grid<std::uint16_t>> rgb;
  PerceptionResult perc;

  UavState state(Role role) const {
    UavState s;
    s.id = init.id;
    s.pose = Pose{est.x, est.y, psi, 0};
    s.velocity = vel;
    s.gnss_ok = gnss_ok;
    s.battery = battery;
    s.link_quality = init.link_quality;
    s.role = role;
    s.mission = mission;
    return s;
  }
};

json vec_json(Vec2 v) { return json::array({v.x, v.y}); }

json poly_json(const Polyline& p) {
  json a = json::array();
  for (Vec2 v : p) a.push_back(vec_json(v));
  return a;
}

bool beacon_due(std::size_t n, double dt, double hz) {
  if (n == 0) return true;
  const double t = static_cast<double>(n) * dt;
  return std::floor(t * hz + 1e-9) > std::floor((t - dt) * hz + 1e-9);
}

std::string frame_name(std::size_t n, const char* kind) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04zu_%s.pgm", n, kind);
  return buf;
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& cfg, const RunOptions& opts) {
  validate(cfg);
  const Variant variant = opts.variant.value_or(cfg.variant);
  const std::uint64_t S = cfg.seed;
  const double dt = cfg.dt_s;
  const double gsd = cfg.sensor.gsd;
  const std::size_t N = cfg.tick_count();

  RunResult res;
  FireFront front = make_circle_front(cfg.front_center, cfg.front_radius_m, cfg.vertex_spacing_m,
                                      cfg.base_rate_mps, cfg.wind_dir_rad, cfg.wind_gain);
  const auto distractors = make_distractors(cfg.rgb, cfg.world_size_m, mix_seed(S, 5));
  const std::uint64_t texture_seed = mix_seed(S, 6);

  std::vector<Agent> agents(cfg.uavs.size());
  std::vector<UavState> states;
  FormationSpec formation;
  Vec2 leader_offset;
  for (const auto& u : cfg.uavs)
    if (u.leader) leader_offset = u.offset;
  for (std::size_t i = 0; i < cfg.uavs.size(); ++i) {
    Agent& a = agents[i];
    a.init = cfg.uavs[i];
    a.pos = a.init.pose->position();
    a.psi = a.init.pose->psi;
    a.speed = cfg.v0;
    a.vel = cfg.v0 * Vec2{std::cos(a.psi), std::sin(a.psi)};
    a.est = a.pos;
    a.battery = a.init.battery;
    a.pipe = std::make_unique<PerceptionPipeline>(cfg.perception, variant);
    a.gps_rng = Rng(mix_seed(S, 3, static_cast<std::uint64_t>(a.init.id)));
    a.last_good = a.state(a.init.leader ? Role::Leader : Role::Follower);
    states.push_back(a.last_good);
    formation.offsets[a.init.id] = a.init.offset - leader_offset;
    res.uavs.push_back(UavTrace{a.init.id, {}, {}});
  }
  Team team(states, formation);
  Channel channel(cfg.comms);
  bool team_loiter = false;

  auto by_id = [&](int id) -> Agent& {
    for (auto& a : agents)
      if (a.init.id == id) return a;
    throw Error(ErrorCode::InvalidArgument, "no UAV with id " + std::to_string(id));
  };
  auto emit = [&](std::size_t n, int uav, const char* type, json payload) {
    json rec{{"tick", n}, {"t", static_cast<double>(n) * dt}, {"uav", uav}, {"type", type},
             {"payload", std::move(payload)}};
    res.log += rec.dump();
    res.log += '\n';
  };

  json export_frames = json::array();
  if (opts.export_dir) std::filesystem::create_directories(*opts.export_dir);

  const double max_turn = cfg.turn_rate_dps * std::numbers::pi / 180.0 * dt;
  const double v_max = cfg.v_max_factor * cfg.v0;
  const int band_r = static_cast<int>(std::lround(cfg.perception.fusion.d_g(gsd) / gsd));

  for (std::size_t n = 0; n < N; ++n) {
    try {
      const double t = static_cast<double>(n) * dt;
      const auto ts = static_cast<std::uint64_t>(std::llround(t * 1e6));
      front = step_front(front, dt);

      // Navigation
      for (auto& a : agents) {
        const auto fix = gps_read(a.init.id, a.pos, cfg.outages, t, cfg.gps_noise_m, a.gps_rng);
        if (n > 0) {
          const Vec2 pred = a.est + dt * a.vel;
          a.est = fix ? pred + cfg.nav_gain * (*fix - pred) : pred;
        } else if (fix) {
          a.est = *fix;
        }
        a.gnss_ok = fix.has_value();
        if (a.gnss_ok) {
          a.dr_elapsed = 0.0;
        } else {
          if (a.dr_elapsed == 0.0) a.last_good = a.state(Role::Follower);
          a.dr_elapsed += dt;
        }
      }

      // Perception
      auto perceive = [&](Agent& a) {
        a.true_cam = camera_at(a.pos, cfg.sensor);
        a.est_cam = camera_at(a.est, cfg.sensor);
        a.thermal = render_thermal(front, a.true_cam, cfg.thermal, cfg.saturation_frac,
                                   mix_seed(S, 1, static_cast<std::uint64_t>(a.init.id), n));
        a.rgb.reset();
        if (uses_rgb(variant))
          a.rgb = render_rgb(front, a.true_cam, cfg.rgb, cfg.smoke_density, distractors, texture_seed,
                             mix_seed(S, 2, static_cast<std::uint64_t>(a.init.id), n));
        SensorInput in;
        in.thermal = a.thermal;
        in.luminance = a.rgb;
        in.timestamp_us = ts;
        in.gsd = gsd;
        in.origin_px = a.est_cam.origin_px;
        a.perc = a.pipe->process(in);
        if (a.perc.polyline) a.poly = a.perc.polyline;
      };
      const unsigned workers = std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(agents.size())));
      if (workers <= 1) {
        for (auto& a : agents) perceive(a);
      } else {
        std::vector<std::exception_ptr> errors(agents.size());
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w)
          pool.emplace_back([&, w] {
            for (std::size_t i = w; i < agents.size(); i += workers) {
              try {
                perceive(agents[i]);
              } catch (...) {
                errors[i] = std::current_exception();
              }
            }
          });
        for (auto& th : pool) th.join();
        for (auto& e : errors)
          if (e) std::rethrow_exception(e);
      }

      const int leader_id = team.leader_id();
      Agent& L = by_id(leader_id);

      // Per-tick evaluation against the true front
      TickRecord rec;
      rec.t = t;
      rec.leader = leader_id;
      rec.footprint = L.true_cam.footprint();
      rec.front_area = signed_area(front.boundary);
      if (L.perc.polyline) {
        rec.leader_polyline = L.perc.polyline->vertices;
        rec.leader_closed = L.perc.polyline->closed;
        rec.vertex_count = L.perc.polyline->vertices.size();
        rec.hausdorff = directed_hausdorff(*rec.leader_polyline, front.boundary, 0.25 * gsd,
                                           rec.leader_closed, true);
      }
      try {
        rec.iou = band_iou(rec.leader_polyline.value_or(Polyline{}), rec.leader_closed, front.boundary, true,
                           cfg.band_width_gsd * gsd, gsd, {rec.footprint});
      } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyTruth) throw;
      }
      {
        const Rect fp = L.est_cam.footprint();
        BitGrid truth_band = rasterize_polyline(front.boundary, true, {fp.x0, fp.y0}, gsd, L.est_cam.width,
                                                L.est_cam.height);
        if (band_r > 0) truth_band = dilate(truth_band, band_r);
        const BitGrid& acc = L.perc.accepted;
        for (std::size_t i = 0; i < acc.size(); ++i)
          if (acc[i] && !truth_band[i]) ++rec.false_px;
      }
      res.pixels_processed.push_back(L.perc.pixels_processed);
      res.pixels_budget.push_back(L.perc.histogram_pixels + L.perc.band_pixels);
      res.stage_times.push_back(L.perc.times);

      for (auto& a : agents) {
        auto& trace = res.uavs[static_cast<std::size_t>(&a - agents.data())];
        trace.positions.push_back(a.pos);
        trace.polylines.push_back(a.perc.polyline ? std::optional<Polyline>(a.perc.polyline->vertices)
                                                  : std::nullopt);
        rec.positions.emplace_back(a.init.id, a.pos);
        if (a.perc.polyline)
          emit(n, a.init.id, "polyline",
               {{"closed", a.perc.polyline->closed}, {"fallback", a.perc.thermal_fallback},
                {"vertices", poly_json(a.perc.polyline->vertices)}});
      }

      // Export frames of one UAV for the offline tracker
      if (opts.export_dir) {
        Agent& e = by_id(opts.export_uav);
        write_pgm(*opts.export_dir / frame_name(n, "thermal"), e.thermal);
        if (e.rgb) write_pgm(*opts.export_dir / frame_name(n, "rgb"), *e.rgb);
        export_frames.push_back({{"id", n},
                                 {"timestamp_us", ts},
                                 {"origin_px", json::array({e.est_cam.origin_px.x, e.est_cam.origin_px.y})}});
      }

      // Beacons
      if (beacon_due(n, dt, cfg.comms.beacon_hz)) {
        for (auto& a : agents) {
          GuidanceMessage m;
          m.ts = ts;
          m.gsd = static_cast<float>(gsd);
          m.eps_m = static_cast<float>(cfg.perception.simplify.eps_m(gsd));
          m.x = static_cast<float>(a.est.x);
          m.y = static_cast<float>(a.est.y);
          m.psi = static_cast<float>(a.psi);
          m.v = static_cast<float>(a.speed);
          if (a.init.id == leader_id && a.poly)
            m.vertices = a.poly->vertices;
          else
            m.vertices = {a.est};
          WireFrame f = encode(m);
          const std::size_t bytes = f.size();
          const bool ok = channel.send(a.init.id, std::move(f), ts);
          emit(n, a.init.id, "message", {{"bytes", bytes}, {"k", m.vertices.size()}, {"delivered", ok}});
        }
      }
      for (const Delivery& d : channel.poll(ts)) {
        const GuidanceMessage m = decode(d.frame);
        for (auto& a : agents) {
          if (a.init.id == d.sender) continue;
          auto it = a.last_from.find(d.sender);
          if (it != a.last_from.end()) {
            if (m.ts <= it->second.ts) continue;
            a.prev_from[d.sender] = it->second;
          }
          a.last_from[d.sender] = m;
        }
      }

      // Mission events
      for (auto& a : agents) {
        a.collision = false;
        for (const auto& b : agents)
          if (&b != &a && dist(a.pos, b.pos) < cfg.safety.collision_dist_m) a.collision = true;
        EventSet ev;
        if (!a.gnss_ok) ev.add(MissionEvent::GpsDegrade);
        if (a.dr_elapsed > cfg.safety.dr_timeout_s) ev.add(MissionEvent::DrTimeout);
        if (a.collision) ev.add(MissionEvent::CollisionBuffer);
        if (a.gnss_ok && a.mission == MissionState::Degraded && !a.collision) ev.add(MissionEvent::GpsRecovered);
        if (a.init.id == leader_id) {
          if (leader_score(a.state(Role::Leader), cfg.weights) < cfg.safety.handover_health_min)
            ev.add(MissionEvent::LeaderWeak);
          if (a.battery <= 0.0) ev.add(MissionEvent::LeaderFailed);
        }
        if (a.mission == MissionState::Handover && a.handover_done) ev.add(MissionEvent::HandoverComplete);
        const MissionState next = mission_step(a.mission, ev);
        if (next != a.mission) {
          json names = json::array();
          for (int k = 0; k < kMissionEventCount; ++k)
            if (ev.has(static_cast<MissionEvent>(k))) names.push_back(to_string(static_cast<MissionEvent>(k)));
          emit(n, a.init.id, "transition", {{"from", to_string(a.mission)}, {"to", to_string(next)}, {"events", names}});
          if (next != MissionState::Handover) a.handover_done = false;
        }
        a.mission = next;
      }

      // Handover
      if (L.mission == MissionState::Handover && !L.handover_done) {
        for (auto& a : agents) {
          UavState& s = team.by_id(a.init.id);
          const Role role = s.role;
          s = a.state(role);
        }
        try {
          const int new_id = team.handover(cfg.weights, cfg.safety);
          if (new_id != leader_id) ++res.handovers;
          emit(n, leader_id, "handover", {{"from", leader_id}, {"to", new_id}});
        } catch (const Error& e) {
          if (e.code() != ErrorCode::NoViableLeader) throw;
          team_loiter = true;
          emit(n, leader_id, "handover", {{"from", leader_id}, {"error", e.what()}});
        }
        L.handover_done = true;
      }
      const int lead_now = team.leader_id();

      // Formation error against the true leader pose
      {
        const Agent& lead = by_id(lead_now);
        const Pose lp{lead.pos.x, lead.pos.y, lead.psi, ts};
        for (const auto& a : agents) {
          if (a.init.id == lead_now) continue;
          const double e = dist(a.pos, formation_target(lp, team.formation().offsets.at(a.init.id)));
          rec.formation_err_sq += e * e;
          ++rec.formation_n;
        }
      }

      // Guidance
      std::vector<GuidanceCommand> cmds(agents.size());
      const double fresh_s = 2.0 / cfg.comms.beacon_hz;
      for (std::size_t i = 0; i < agents.size(); ++i) {
        Agent& a = agents[i];
        GuidanceCommand cmd{0.0, a.psi, CommandSource::Loiter};
        if (team_loiter) {
          // whole team holds
        } else if (a.collision) {
          Vec2 away;
          double best = std::numeric_limits<double>::infinity();
          for (const auto& b : agents)
            if (&b != &a && dist(a.pos, b.pos) < best) {
              best = dist(a.pos, b.pos);
              away = a.pos - b.pos;
            }
          cmd.target_heading = norm(away) > 0.0 ? std::atan2(away.y, away.x) : a.psi;
          cmd.target_speed = 0.5 * cfg.v0;
        } else if (!a.gnss_ok) {
          cmd = dead_reckon(a.last_good, a.dr_elapsed, cfg.safety).command;
        } else if (a.init.id == lead_now) {
          if (a.poly && a.poly->vertices.size() >= 2 && polyline_length(a.poly->vertices, a.poly->closed) > 0.0)
            cmd = tangent_follow(*a.poly, Pose{a.est.x, a.est.y, a.psi, ts}, cfg.v0, cfg.lookahead_m());
        } else {
          const auto it = a.last_from.find(lead_now);
          if (it != a.last_from.end()) {
            const GuidanceMessage& m = it->second;
            const double stale = static_cast<double>(ts - std::min(ts, m.ts)) * 1e-6;
            res.staleness_ms.push_back(stale * 1e3);
            double omega = 0.0;
            const auto pit = a.prev_from.find(lead_now);
            if (pit != a.prev_from.end() && m.ts > pit->second.ts)
              omega = wrap_angle(static_cast<double>(m.psi) - pit->second.psi) /
                      (static_cast<double>(m.ts - pit->second.ts) * 1e-6);
            const Vec2 h0{std::cos(m.psi), std::sin(m.psi)};
            const Pose pred{m.x + m.v * stale * h0.x, m.y + m.v * stale * h0.y,
                            wrap_angle(m.psi + omega * stale), ts};
            const Vec2 o = team.formation().offsets.at(a.init.id);
            const Vec2 target = formation_target(pred, o);
            const Vec2 h{std::cos(pred.psi), std::sin(pred.psi)};
            const Vec2 ro = target - pred.position();
            Vec2 v = m.v * h + omega * Vec2{-ro.y, ro.x} + cfg.kp * (target - a.est);

            // Spacing consensus along the leader heading, over fresh neighbours.
            double sum = 0.0;
            const double s_i = dot(a.est - pred.position(), h);
            for (const auto& b : agents) {
              if (&b == &a) continue;
              const auto bit = a.last_from.find(b.init.id);
              if (bit == a.last_from.end()) continue;
              if (static_cast<double>(ts - std::min(ts, bit->second.ts)) * 1e-6 > fresh_s) continue;
              const double s_j = b.init.id == lead_now
                                     ? 0.0
                                     : dot(Vec2{bit->second.x, bit->second.y} - pred.position(), h);
              const double sd_j = team.formation().offsets.at(b.init.id).x;
              sum += (s_j - s_i) - (sd_j - o.x);
            }
            v = v + (cfg.consensus_gain * sum) * h;
            cmd = GuidanceCommand{std::min(norm(v), v_max), norm(v) > 0.0 ? std::atan2(v.y, v.x) : a.psi,
                                  CommandSource::FormationHold};
          }
        }
        cmds[i] = cmd;
      }

      // Kinematics
      for (std::size_t i = 0; i < agents.size(); ++i) {
        Agent& a = agents[i];
        const GuidanceCommand& c = cmds[i];
        a.source = c.source;
        a.psi = wrap_angle(a.psi + std::clamp(wrap_angle(c.target_heading - a.psi), -max_turn, max_turn));
        a.speed = std::clamp(c.target_speed, 0.0, v_max);
        a.vel = a.speed * Vec2{std::cos(a.psi), std::sin(a.psi)};
        a.pos = a.pos + dt * a.vel;
        a.battery = std::max(0.0, a.battery - a.init.battery_drain_per_s * dt);
        emit(n, a.init.id, "pose",
             {{"x", a.pos.x}, {"y", a.pos.y}, {"psi", a.psi}, {"speed", a.speed}, {"est", vec_json(a.est)},
              {"gnss", a.gnss_ok}, {"role", a.init.id == lead_now ? "Leader" : "Follower"},
              {"mission", to_string(a.mission)}, {"source", to_string(c.source)}, {"battery", a.battery}});
      }

      json tick{{"leader", leader_id}, {"false_px", rec.false_px}, {"vertices", rec.vertex_count},
                {"front_area", rec.front_area}};
      tick["iou"] = rec.iou ? json(*rec.iou) : json(nullptr);
      tick["hausdorff"] = rec.hausdorff ? json(*rec.hausdorff) : json(nullptr);
      emit(n, -1, "tick", std::move(tick));
      res.ticks.push_back(std::move(rec));
    } catch (const Error& e) {
      throw Error(e.code(), "tick " + std::to_string(n) + ": " + e.what());
    }
  }

  if (opts.export_dir) {
    json side{{"gsd", gsd}, {"variant", to_string(variant)}, {"uav", opts.export_uav}, {"frames", export_frames}};
    std::ofstream(*opts.export_dir / "track.json") << side.dump(2) << '\n';
  }
  res.message_bytes = channel.bytes_sent();
  res.messages_sent = channel.sent();
  res.messages_dropped = channel.dropped();
  res.final_front = front.boundary;
  res.final_perimeter_m = polyline_length(front.boundary, true);
  return res;
}

}  // namespace ember

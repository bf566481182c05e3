// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// failed. Reference numbers come from the published hull tables or from an
// independent 30-digit evaluation of the closed-form expressions; both are
// frozen below. Each criterion also has a wall-clock budget.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "helm/config.hpp"
#include "helm/hydrostatics.hpp"
#include "helm/mission.hpp"
#include "helm/perception.hpp"
#include "helm/protocol.hpp"
#include "helm/vectors.hpp"

using namespace helm;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "!! ") + what;
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool within(double got, double want, double tol) { return std::abs(got - want) <= tol; }
bool within_rel(double got, double want, double rel) {
  return std::abs(got - want) <= rel * std::abs(want);
}

// Independent reference values (mpmath, 30 digits).
namespace ref {
constexpr double kWettedArea = 3.97;
constexpr double kReynolds = 6107784.431137724;
constexpr double kFriction = 0.0032744395837576562;
constexpr double kFormFactor = 0.21580392955065193;
constexpr double kFroude = 0.8815430713948304;
constexpr double kPrismatic = 0.19607843137254902;
constexpr double kMidship = 1.155;
constexpr double kWaterplane = 0.7904411764705882;
constexpr double kViscous = 102.41558194305814;

// wave regression on the tabulated coefficients at the design speed
constexpr double kWaveC = 72.464370600216075;
constexpr double kWaveM1 = -0.52176981954117647;
constexpr double kWaveM2 = -0.39285104184651903;
constexpr double kWaveLambda = 0.18207;
constexpr double kWaveExponent = -0.9665849408934124;
constexpr double kWaveRaw = 20821.007992137082;
constexpr double kWaveScale = 0.0041390887526936888;
}  // namespace ref

// Values printed in the hull tables.
namespace table {
constexpr double kReynolds = 5938123.75;
constexpr double kFriction = 0.00329126;
constexpr double kFormFactor = 0.9;
constexpr double kWettedArea = 3.32;
constexpr double kPrismatic = 0.17;
constexpr double kMidship = 0.52;
constexpr double kWaterplane = 0.7902;
constexpr double kViscous = 129.05;
constexpr double kWave = 86.18;
constexpr double kTotal = 215.23;
}  // namespace table

const cfg::Config& bep() {
  static const cfg::Config c = cfg::load_config_file(cfg::default_config_path());
  return c;
}

cfg::Config config_file(const char* name) {
  return cfg::load_config_file(std::filesystem::path(HELM_DATA_DIR) / name);
}

cfg::MissionPlan plan_file(const char* name) {
  return cfg::load_plan_file(std::filesystem::path(HELM_DATA_DIR) / "missions" / name);
}

// ---------------------------------------------------------------------------

Outcome friction_line() {
  Outcome o;
  const double cf = hydro::friction_coefficient(table::kReynolds);
  o.check(within(cf, 0.00329126, 1e-7), fmt("C_F(%.2f) = %.8f, want 0.00329126 +-1e-7", table::kReynolds, cf));
  return o;
}

Outcome thrust_sizing() {
  Outcome o;
  const auto p = hydro::thrust_plan(table::kTotal, 0.5, 1.25, 161.0);
  o.check(within(p.nominal_thrust_Tn, 430.46, 0.01), fmt("nominal %.3f N", p.nominal_thrust_Tn));
  o.check(within(p.final_thrust_Tf, 538.07, 0.01), fmt("final %.3f N", p.final_thrust_Tf));
  o.check(p.thruster_count == 4, fmt("%d units of 161 N", p.thruster_count));
  return o;
}

Outcome table_viscous() {
  Outcome o;
  hydro::CoefficientOverrides ov;
  ov.friction_CF = table::kFriction;
  ov.form_factor_K = table::kFormFactor;
  ov.wetted_area_Swet = table::kWettedArea;
  const auto v = hydro::viscous_drag(hydro::bep_echoboat_160(), {}, hydro::kBepDesignSpeed, ov);
  o.check(within_rel(v.viscous_RV, table::kViscous, 0.05),
          fmt("R_V = %.2f N vs %.2f (%+.1f%%, limit 5%%)", v.viscous_RV, table::kViscous,
              100.0 * (v.viscous_RV / table::kViscous - 1.0)));
  return o;
}

Outcome wave_formula() {
  Outcome o;
  const hydro::HullGeometry hull = hydro::bep_echoboat_160();
  hydro::CoefficientOverrides ov = hydro::bep_table_overrides();
  ov.wave_scale_kw = 1.0;
  const auto t = hydro::wave_drag(hull, {}, hydro::kBepDesignSpeed, ov);
  const std::pair<const char*, std::pair<double, double>> rows[] = {
      {"c", {t.c, ref::kWaveC}},
      {"m1", {t.m1, ref::kWaveM1}},
      {"m2", {t.m2, ref::kWaveM2}},
      {"lambda", {t.lambda, ref::kWaveLambda}},
      {"exponent", {t.exponent, ref::kWaveExponent}}};
  double worst = 0.0;
  for (const auto& [name, v] : rows) {
    const double rel = std::abs(v.first / v.second - 1.0);
    worst = std::max(worst, rel);
    if (rel > 0.002) o.check(false, fmt("%s = %.10g vs %.10g", name, v.first, v.second));
  }
  o.check(worst <= 0.002, fmt("intermediates within %.2e of oracle (limit 0.2%%)", worst));

  // the tabulated wave drag only comes out with the calibrated scale
  o.check(!within_rel(t.wave_RW, table::kWave, 0.05),
          fmt("unscaled R_W = %.0f N, not %.2f", t.wave_RW, table::kWave));
  const hydro::DragModel cal = bep().vessel.drag;
  const double rw = cal.breakdown(hydro::kBepDesignSpeed).wave_RW;
  o.check(within(rw, table::kWave, 0.01), fmt("calibrated R_W = %.3f N", rw));
  o.check(within_rel(cal.overrides.wave_scale_kw, ref::kWaveScale, 1e-9),
          fmt("kw = %.10g", cal.overrides.wave_scale_kw));
  return o;
}

// Derived chain from the hull geometry, against the oracle, and each
// departure from the printed table made explicit.
Outcome derived_chain() {
  Outcome o;
  const hydro::HullGeometry g = hydro::bep_echoboat_160();
  const hydro::FluidProperties f;
  const double v = hydro::kBepDesignSpeed;
  const auto fc = hydro::form_coefficients(g);
  const auto visc = hydro::viscous_drag(g, f, v);

  struct Row {
    const char* name;
    double derived, oracle, printed;
    bool departs;  // derived value disagrees with the table by more than 1%
  };
  const Row rows[] = {
      {"S_wet", hydro::wetted_surface(g), ref::kWettedArea, table::kWettedArea, true},
      {"K", hydro::form_factor(g), ref::kFormFactor, table::kFormFactor, true},
      {"Re", hydro::reynolds_number(g.length_L, v, f.kinematic_viscosity_nu), ref::kReynolds, table::kReynolds, true},
      {"C_F", visc.friction_CF, ref::kFriction, table::kFriction, false},
      {"Fn", hydro::froude_number(v, g.length_L, f.gravity_g), ref::kFroude, ref::kFroude, false},
      {"Cp", fc.prismatic_Cp, ref::kPrismatic, table::kPrismatic, true},
      {"CM", fc.midship_CM, ref::kMidship, table::kMidship, true},
      {"CWP", fc.waterplane_CWP, ref::kWaterplane, table::kWaterplane, false},
      {"R_V", visc.viscous_RV, ref::kViscous, table::kViscous, true},
  };
  int departures = 0;
  for (const Row& r : rows) {
    const bool pinned = within_rel(r.derived, r.oracle, 0.01);
    const bool departs = !within_rel(r.derived, r.printed, 0.01);
    departures += departs;
    if (!pinned) o.check(false, fmt("%s = %.6g, oracle %.6g", r.name, r.derived, r.oracle));
    if (departs != r.departs)
      o.check(false, fmt("%s = %.6g vs table %.6g: departure %s", r.name, r.derived, r.printed,
                         departs ? "unexpected" : "vanished"));
    std::printf("      %-5s derived %-12.6g table %-12.6g %s\n", r.name, r.derived, r.printed,
                departs ? "departs" : "agrees");
  }
  o.check(true, fmt("S_wet %.2f K %.4f Re %.4e Fn %.4f R_V %.1f within 1%% of oracle; %d table departures as recorded",
                    rows[0].derived, rows[1].derived, rows[2].derived, rows[4].derived,
                    rows[8].derived, departures));
  o.check(fc.midship_CM > 1.0, "midship coefficient above 1 is flagged");
  return o;
}

struct StreamRun {
  std::size_t bytes = 0, lost = 0, false_accepts = 0, unexplained = 0;
  std::uint64_t resyncs = 0;
};

// Interleaves garbage (a share of it forced to the magic byte), feeds it in
// random chunks and matches the output against what was sent.
StreamRun run_stream(const std::vector<proto::Decoded>& sent, std::mt19937_64& rng, double magic_share) {
  proto::Bytes stream;
  std::uniform_int_distribution<int> gap(0, 24), byte(0, 255), chunk(1, 97);
  std::bernoulli_distribution magic(magic_share);
  for (const auto& d : sent) {
    for (int k = gap(rng); k > 0; --k)
      stream.push_back(magic(rng) ? proto::kMagic : static_cast<std::uint8_t>(byte(rng)));
    const proto::Bytes f = proto::encode(d.message, d.seq);
    stream.insert(stream.end(), f.begin(), f.end());
  }
  proto::StreamParser parser;
  std::vector<proto::Decoded> got;
  for (std::size_t pos = 0; pos < stream.size();) {
    const std::size_t len = std::min<std::size_t>(chunk(rng), stream.size() - pos);
    for (auto& d : parser.feed({stream.data() + pos, len}).frames) got.push_back(std::move(d));
    pos += len;
  }
  for (auto& d : parser.finish().frames) got.push_back(std::move(d));

  StreamRun run;
  run.bytes = stream.size();
  run.resyncs = parser.stats().bad_magic + parser.stats().bad_length + parser.stats().bad_crc;
  std::size_t m = 0;
  bool after_false = false;
  for (const auto& d : got) {
    if (m < sent.size() && d == sent[m]) {
      ++m;
      after_false = false;
      continue;
    }
    std::size_t j = m + 1;
    while (j < sent.size() && j < m + 16 && !(d == sent[j])) ++j;
    if (j < sent.size() && j < m + 16) {
      run.lost += j - m;
      if (!after_false) run.unexplained += j - m;
      m = j + 1;
      after_false = false;
    } else {
      ++run.false_accepts;
      after_false = true;
    }
  }
  run.lost += sent.size() - m;
  run.unexplained += sent.size() - m;
  return run;
}

Outcome protocol() {
  Outcome o;
  const char* check = "123456789";
  const std::uint16_t crc =
      proto::crc16({reinterpret_cast<const std::uint8_t*>(check), 9});
  o.check(crc == 0x29B1, fmt("CRC check 0x%04X", crc));

  std::mt19937_64 rng(2024);
  const int n = 10000;
  std::vector<proto::Decoded> sent;
  int bad_round_trips = 0;
  for (int i = 0; i < n; ++i) {
    const auto seq = static_cast<std::uint8_t>(rng());
    proto::Decoded d{proto::detail::random_message(rng), seq};
    const proto::Bytes f = proto::encode(d.message, seq);
    const auto back = proto::decode(f);
    if (f.size() != 6 + f[1] || !std::holds_alternative<proto::Decoded>(back) ||
        !(std::get<proto::Decoded>(back) == d))
      ++bad_round_trips;
    sent.push_back(std::move(d));
  }
  o.check(bad_round_trips == 0, fmt("%d/%d round trips failed", bad_round_trips, n));

  // uniform garbage between frames, random chunking: every frame must come out
  const StreamRun plain = run_stream(sent, rng, 0.0);
  o.check(plain.lost == 0 && plain.false_accepts == 0,
          fmt("uniform garbage: %zu/%zu frames recovered from %zu bytes, %llu resyncs", sent.size() - plain.lost,
              sent.size(), plain.bytes, static_cast<unsigned long long>(plain.resyncs)));

  // garbage dense in magic bytes: a false start can pass the 16-bit crc and
  // swallow the frame behind it. Only that may lose a frame.
  const StreamRun dense = run_stream(sent, rng, 0.25);
  o.check(dense.unexplained == 0,
          fmt("magic-dense garbage: %llu resyncs, %zu crc collisions, %zu frames lost, %zu unexplained",
              static_cast<unsigned long long>(dense.resyncs), dense.false_accepts, dense.lost,
              dense.unexplained));
  return o;
}

Outcome perception_chain() {
  Outcome o;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0.0, 0.02);
  std::array<double, perception::kSectorCount> truth;
  for (std::size_t i = 0; i < truth.size(); ++i) truth[i] = 2.0 + 0.3 * i;
  perception::LidarSweep sweep;
  for (int i = 0; i < 7200; ++i) {
    const double bearing = i * 0.05;
    sweep.samples.push_back({bearing, truth[perception::sector_of(bearing)] + noise(rng), 200});
  }
  perception::Pipeline pipe;
  const auto out = pipe.process(sweep, std::nullopt, 0.0).sectors;
  double worst = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    worst = std::max(worst, std::abs(out.distances_cm[i] - truth[i] * 100.0));
  o.check(worst <= 1.0, fmt("7200-sample ring: worst sector %.2f cm off", worst));

  const std::vector<double> bin{5.0, 5.2, 30.0};
  const double w = *perception::weighted_min_average(bin, 0.5);
  o.check(within(w, 5.08, 0.01), fmt("weighted_min_average([5,5.2,30], 0.5) = %.4f", w));

  const perception::ProximityParams p;
  auto bow = [](double m) {
    perception::SectorArray a;
    a.distances_cm[0] = static_cast<std::uint16_t>(std::lround(m * 100.0));
    return a;
  };
  const bool exact = perception::proximity_policy(bow(p.stop_distance), p) == 0.0 &&
                     perception::proximity_policy(bow(p.stop_distance + 0.01), p) == p.slow_factor &&
                     perception::proximity_policy(bow(p.slow_distance), p) == p.slow_factor &&
                     perception::proximity_policy(bow(p.slow_distance + 0.01), p) == 1.0 &&
                     perception::proximity_policy(perception::SectorArray{}, p) == 1.0;
  o.check(exact, fmt("policy: stop at <= %.2f m, x%.1f at <= %.2f m, full beyond", p.stop_distance,
                     p.slow_factor, p.slow_distance));
  return o;
}

Outcome heading_hold(const char* plan_name, double speed, double heading) {
  Outcome o;
  const cfg::MissionPlan plan = plan_file(plan_name);
  const auto log = mission::run_mission(bep(), plan);
  const double end = log.end_time;
  double speed_err = 0.0, heading_err = 0.0;
  std::size_t n = 0;
  for (const auto& r : log.records) {
    if (r.t < end - 60.0 - 1e-9) continue;
    speed_err = std::max(speed_err, std::abs(r.truth_forward_speed - speed));
    heading_err = std::max(heading_err, std::abs(wrap_error(heading, r.truth.psi)));
    ++n;
  }
  o.check(log.termination == mission::Termination::Completed && within(end, 120.0, 1e-6),
          fmt("%s run of %.1f s", mission::to_string(log.termination), end));
  o.check(speed_err <= 0.1, fmt("max speed error %.3f m/s over final 60 s (%zu ticks)", speed_err, n));
  o.check(heading_err <= 5.0, fmt("max heading error %.2f deg", heading_err));
  return o;
}

Outcome square_with_current() {
  Outcome o;
  const cfg::MissionPlan plan = plan_file("square-waypoints.json");
  std::vector<std::pair<double, double>> targets;
  for (const auto& it : plan.items)
    if (const auto* w = std::get_if<cfg::WaypointItem>(&it)) targets.emplace_back(w->x_east, w->y_north);

  double worst_arrival = 0.0, worst_loiter = 0.0, shortest_hold = 1e9;
  const char* names[] = {"east", "north", "west", "south"};
  const double dirs[][2] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  for (int d = 0; d < 4; ++d) {
    cfg::Config c = bep();
    c.environment.current_east = 0.3 * dirs[d][0];
    c.environment.current_north = 0.3 * dirs[d][1];
    const auto log = mission::run_mission(c, plan);

    std::vector<double> arrivals;
    for (const auto& e : log.events)
      if (e.kind == ctl::EventKind::Arrival && e.from == ctl::Mode::GuidedPosition) arrivals.push_back(e.t);
    if (arrivals.size() != targets.size() || log.termination != mission::Termination::Completed) {
      o.check(false, fmt("current to %s: %zu arrivals, %s", names[d], arrivals.size(),
                         mission::to_string(log.termination)));
      continue;
    }
    for (std::size_t k = 0; k < arrivals.size(); ++k)
      for (const auto& r : log.records)
        if (std::abs(r.t - arrivals[k]) < 1e-9)
          worst_arrival = std::max(worst_arrival, std::hypot(r.truth.x_east - targets[k].first,
                                                             r.truth.y_north - targets[k].second));
    const auto [hx, hy] = targets.back();
    double excursion = 0.0;
    for (const auto& r : log.records)
      if (r.t >= arrivals.back())
        excursion = std::max(excursion, std::hypot(r.truth.x_east - hx, r.truth.y_north - hy));
    worst_loiter = std::max(worst_loiter, excursion);
    shortest_hold = std::min(shortest_hold, log.end_time - arrivals.back());
    std::printf("      current to %-5s  arrivals at %.1f %.1f %.1f %.1f s  loiter excursion %.2f m\n",
                names[d], arrivals[0], arrivals[1], arrivals[2], arrivals[3], excursion);
  }
  o.check(worst_arrival <= 2.0, fmt("worst arrival %.2f m from its waypoint", worst_arrival));
  o.check(shortest_hold >= 60.0 - 1e-6, fmt("held station %.1f s", shortest_hold));
  o.check(worst_loiter <= 2.0, fmt("worst loiter excursion %.2f m in 0.3 m/s current", worst_loiter));
  return o;
}

double full_ahead_speed(int per_side) {
  cfg::Config c = bep();
  c.vessel.thrusters_per_side = per_side;
  c.perception_enabled = false;
  mission::VesselSim sim(c);
  sim.autopilot().arm(true, true, 0.0);
  sim.autopilot().set_mode(ctl::Mode::Manual, ctl::ManualSetpoint{1.0, 1.0}, 0.0);
  double u = 0.0;
  for (int k = 0; k < 1200; ++k) u = sim.tick().truth.u;
  return u;
}

Outcome top_speed() {
  Outcome o;
  const double two = dyn::equilibrium_speed(2, bep().vessel);
  const double four = dyn::equilibrium_speed(4, bep().vessel);
  o.check(within_rel(two, 2.2, 0.10), fmt("2 thrusters: equilibrium %.3f m/s", two));
  o.check(four >= 3.6, fmt("4 thrusters: equilibrium %.3f m/s", four));
  const double sim_two = full_ahead_speed(1), sim_four = full_ahead_speed(2);
  o.check(within_rel(sim_two, 2.2, 0.10), fmt("simulated full ahead %.3f m/s", sim_two));
  o.check(sim_four >= 3.6, fmt("simulated full ahead x4 %.3f m/s", sim_four));
  return o;
}

Outcome obstacle_stop() {
  Outcome o;
  const cfg::Config c = config_file("wall-stop.json");
  const auto log = mission::run_mission(c, *c.mission);
  const auto& prox = c.autopilot.proximity;
  const double wall_y = 40.0, half_length = 0.5 * c.vessel.drag.hull.length_L;

  std::optional<std::size_t> crossed, zeroed;
  double clearance = 1e9;
  for (std::size_t k = 0; k < log.records.size(); ++k) {
    const auto& r = log.records[k];
    perception::SectorArray a;
    a.distances_cm = r.sectors;
    const auto ahead = perception::nearest_ahead(a, prox.cone_half_width);
    if (!crossed && ahead && *ahead <= prox.stop_distance) crossed = k;
    if (crossed && !zeroed && r.control.t_forward == 0.0) zeroed = k;
    const double bow_y = r.truth.y_north + half_length * std::cos(deg2rad(r.truth.psi));
    clearance = std::min(clearance, wall_y - bow_y);
  }
  if (!crossed) {
    o.check(false, "fused bow distance never reached stop distance");
    return o;
  }
  const double lag = zeroed ? log.records[*zeroed].t - log.records[*crossed].t : 1e9;
  o.check(zeroed && lag <= mission::kControlDt + 1e-9,
          fmt("forward thrust 0 at %.1f s, %.1f s after the bow reading reached %.1f m", zeroed ? log.records[*zeroed].t : -1.0,
              lag, prox.stop_distance));
  bool held = true;
  for (std::size_t k = zeroed.value_or(0); k < log.records.size(); ++k)
    held = held && log.records[k].control.t_forward <= 0.0;
  o.check(held, "no forward thrust afterwards");
  o.check(clearance >= 1.0, fmt("closest bow approach %.2f m from the wall", clearance));
  return o;
}

Outcome determinism() {
  Outcome o;
  struct Case {
    const char* name;
    cfg::Config c;
    cfg::MissionPlan plan;
  };
  std::vector<Case> cases;
  cases.push_back({"slow hold", bep(), plan_file("slow-heading-hold.json")});
  cases.push_back({"fast hold", bep(), plan_file("fast-heading-hold.json")});
  cfg::Config river = config_file("river-current.json");
  cases.push_back({"square in current", river, plan_file("square-waypoints.json")});
  const cfg::Config wall = config_file("wall-stop.json");
  cases.push_back({"wall", wall, *wall.mission});
  for (auto& k : cases) {
    k.c.environment.noise_seed = 7;
    const std::string a = mission::to_jsonl(mission::run_mission(k.c, k.plan));
    const std::string b = mission::to_jsonl(mission::run_mission(k.c, k.plan));
    k.c.environment.noise_seed = 8;
    const std::string other = mission::to_jsonl(mission::run_mission(k.c, k.plan));
    o.check(a == b, fmt("%s: %zu log bytes %s", k.name, a.size(), a == b ? "identical" : "DIFFER"));
    if (a == other) o.check(false, fmt("%s: seed has no effect", k.name));
  }
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* id;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"friction-line", 1, friction_line},
      {"thrust-sizing", 1, thrust_sizing},
      {"table-viscous-drag", 1, table_viscous},
      {"wave-drag-formula", 1, wave_formula},
      {"derived-chain", 1, derived_chain},
      {"protocol", 30, protocol},
      {"perception", 5, perception_chain},
      {"slow-heading-hold", 10, [] { return heading_hold("slow-heading-hold.json", 0.5, 355.0); }},
      {"fast-heading-hold", 10, [] { return heading_hold("fast-heading-hold.json", 1.8, 240.0); }},
      {"square-waypoints-current", 20, square_with_current},
      {"top-speed", 5, top_speed},
      {"obstacle-stop", 10, obstacle_stop},
      {"determinism", 20, determinism},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (dt > c.budget_s) o.check(false, fmt("took %.2f s, budget %.0f s", dt, c.budget_s));
    failed += !o.pass;
    std::printf("%s %-26s %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", c.id, o.detail.c_str(), dt);
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}

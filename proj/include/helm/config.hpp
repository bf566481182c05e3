#pragma once

// Configuration documents (JSON). One document describes the vessel, its
// environment, sensors, autopilot, battery, network ports and optionally a
// mission plan. The published schema lives in config/schema.json.
//
// A document may name a hull preset ("hull": {"preset": "nac-kayak"}); the
// preset file is merged underneath the document, document values winning.
// Every leaf parameter gets a provenance entry: "user", "preset:<name>" or
// "default".

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "helm/autopilot.hpp"
#include "helm/dynamics.hpp"
#include "helm/errors.hpp"
#include "helm/hydrostatics.hpp"
#include "helm/perception.hpp"
#include "helm/world.hpp"

namespace helm::cfg {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Mission plan

struct WaypointItem {
  double x_east = 0.0;
  double y_north = 0.0;
  double accept_radius = 2.0;
  double speed = 1.0;
  bool operator==(const WaypointItem&) const = default;
};

struct VelHeadLeg {
  double speed = 0.0;
  double heading = 0.0;
  double duration = 1.0;
  bool operator==(const VelHeadLeg&) const = default;
};

struct LoiterAt {
  double x_east = 0.0;
  double y_north = 0.0;
  double duration = 1.0;
  std::optional<double> radius;  // empty: control loiter radius
  bool operator==(const LoiterAt&) const = default;
};

struct SetModeItem {
  ctl::Mode mode = ctl::Mode::Hold;
  bool operator==(const SetModeItem&) const = default;
};

struct Wait {
  double duration = 1.0;
  bool operator==(const Wait&) const = default;
};

using MissionItem = std::variant<WaypointItem, VelHeadLeg, LoiterAt, SetModeItem, Wait>;

struct MissionPlan {
  std::vector<MissionItem> items;
  double home_east = 0.0;
  double home_north = 0.0;
  bool operator==(const MissionPlan&) const = default;
};

inline void validate(const MissionPlan& p) {
  if (p.items.empty()) throw RangeError("mission plan is empty");
  for (const auto& it : p.items) {
    if (const auto* w = std::get_if<WaypointItem>(&it)) {
      if (!(w->speed >= 0.0)) throw RangeError("waypoint speed must be >= 0");
      if (!(w->accept_radius > 0.0)) throw RangeError("accept radius must be > 0");
    } else if (const auto* v = std::get_if<VelHeadLeg>(&it)) {
      if (!(v->speed >= 0.0)) throw RangeError("leg speed must be >= 0");
      if (!(v->heading >= 0.0 && v->heading < 360.0)) throw RangeError("heading must be in [0, 360)");
      if (!(v->duration > 0.0)) throw RangeError("leg duration must be > 0");
    } else if (const auto* l = std::get_if<LoiterAt>(&it)) {
      if (!(l->duration > 0.0)) throw RangeError("loiter duration must be > 0");
      if (l->radius && !(*l->radius > 0.0)) throw RangeError("loiter radius must be > 0");
    } else if (const auto* w2 = std::get_if<Wait>(&it)) {
      if (!(w2->duration > 0.0)) throw RangeError("wait duration must be > 0");
    }
  }
}

inline std::optional<ctl::Mode> mode_from_name(const std::string& name) {
  for (std::uint8_t c = 0; c < ctl::kModeCount; ++c) {
    const auto m = static_cast<ctl::Mode>(c);
    if (name == ctl::to_string(m)) return m;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Configuration

/// Linear draw model: hotel load plus a current proportional to the summed
/// absolute thrust of both sides.
struct BatteryParams {
  double capacity_ah = 66.0;
  double voltage = 22.2;
  double hotel_current = 1.5;       // A
  double current_per_newton = 0.5;  // A/N
  double initial_fraction = 1.0;
  bool operator==(const BatteryParams&) const = default;
};

struct ServiceParams {
  int tcp_port = 14650;
  int websocket_port = 14651;
  double heartbeat_hz = 1.0;
  double state_hz = 5.0;
  double obstacle_hz = 5.0;
  double timescale = 1.0;  // 0 = unpaced
  double waypoint_speed = 1.0;  // transit speed for SET_WAYPOINT targets, m/s
  bool operator==(const ServiceParams&) const = default;
};

struct RunParams {
  double timeout = 3600.0;      // s of simulated time
  double settle_window = 20.0;  // s excluded at the start of steady segments
  bool operator==(const RunParams&) const = default;
};

struct Config {
  std::string hull_preset;
  dyn::VesselModel vessel;
  dyn::EnvironmentField environment;
  bool position_fix = true;
  world::ObstacleField world;
  world::LidarConfig lidar;
  world::SonarConfig sonar;
  bool perception_enabled = true;
  perception::PerceptionParams perception;
  ctl::AutopilotParams autopilot;
  BatteryParams battery;
  ServiceParams service;
  RunParams run;
  std::optional<MissionPlan> mission;
  std::map<std::string, std::string> provenance;  // JSON pointer -> source
};

/// Steady thrust (both sides) needed to hold `speed` through the water.
inline double cruise_thrust(const dyn::VesselModel& vm, double speed) {
  return vm.hull_resistance(speed) + vm.body.d_u1 * speed;
}

inline double battery_current(const BatteryParams& b, double total_abs_thrust) {
  return b.hotel_current + b.current_per_newton * total_abs_thrust;
}

/// Hours a full pack lasts holding `speed` in calm water.
inline double cruise_runtime_hours(const dyn::VesselModel& vm, const BatteryParams& b,
                                   double speed) {
  return b.capacity_ah / battery_current(b, cruise_thrust(vm, speed));
}

// ---------------------------------------------------------------------------
// Document handling

/// Merges `overlay` onto `base` (objects recurse, everything else replaces).
inline json merge(json base, const json& overlay) {
  if (!base.is_object() || !overlay.is_object()) return overlay;
  for (auto it = overlay.begin(); it != overlay.end(); ++it)
    base[it.key()] = base.contains(it.key()) ? merge(base[it.key()], it.value()) : it.value();
  return base;
}

inline void record_leaves(const json& j, const std::string& path, const std::string& source,
                          std::map<std::string, std::string>& out) {
  if (j.is_object() && !j.empty()) {
    for (auto it = j.begin(); it != j.end(); ++it)
      record_leaves(it.value(), path + "/" + it.key(), source, out);
  } else {
    out[path] = source;
  }
}

namespace detail {

/// Cursor over one JSON object. Reads mark keys as used; finish() rejects the
/// rest. Every field read is recorded in the provenance map.
class Node {
 public:
  Node(const json* j, std::string path, std::map<std::string, std::string>* prov)
      : j_(j), path_(std::move(path)), prov_(prov) {
    if (j_ && !j_->is_object()) throw SchemaError(path_.empty() ? "/" : path_, "expected an object");
  }

  const std::string& path() const { return path_; }
  std::string at(const std::string& key) const { return path_ + "/" + key; }
  bool has(const std::string& key) const { return j_ && j_->contains(key); }

  void number(const std::string& key, double& out) {
    if (const json* v = take(key)) {
      if (!v->is_number()) throw SchemaError(at(key), "expected a number");
      out = v->get<double>();
      if (!std::isfinite(out)) throw SchemaError(at(key), "must be finite");
    }
  }
  void number(const std::string& key, std::optional<double>& out) {
    if (const json* v = take(key)) {
      if (!v->is_number()) throw SchemaError(at(key), "expected a number");
      out = v->get<double>();
    }
  }
  template <class Int>
  void integer(const std::string& key, Int& out, long long lo, long long hi) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer()) throw SchemaError(at(key), "expected an integer");
      const long long x = v->get<long long>();
      if (x < lo || x > hi)
        throw SchemaError(at(key), "must lie in [" + std::to_string(lo) + ", " +
                                       std::to_string(hi) + "]");
      out = static_cast<Int>(x);
    }
  }
  void boolean(const std::string& key, bool& out) {
    if (const json* v = take(key)) {
      if (!v->is_boolean()) throw SchemaError(at(key), "expected true or false");
      out = v->get<bool>();
    }
  }
  void string(const std::string& key, std::string& out) {
    if (const json* v = take(key)) {
      if (!v->is_string()) throw SchemaError(at(key), "expected a string");
      out = v->get<std::string>();
    }
  }
  Node object(const std::string& key) {
    const json* v = take(key, false);
    return Node(v, at(key), prov_);
  }
  /// Array of objects; empty if absent.
  std::vector<Node> array(const std::string& key) {
    std::vector<Node> out;
    const json* v = take(key, false);
    if (!v) return out;
    if (!v->is_array()) throw SchemaError(at(key), "expected an array");
    for (std::size_t i = 0; i < v->size(); ++i)
      out.emplace_back(&(*v)[i], at(key) + "/" + std::to_string(i), prov_);
    return out;
  }

  void finish() const {
    if (!j_) return;
    for (auto it = j_->begin(); it != j_->end(); ++it)
      if (!used_.count(it.key())) throw SchemaError(at(it.key()), "unknown key");
  }

 private:
  const json* take(const std::string& key, bool leaf = true) {
    if (!has(key)) {
      if (leaf && prov_) prov_->emplace(at(key), "default");
      return nullptr;
    }
    used_.insert(key);
    return &(*j_)[key];
  }

  const json* j_;
  std::string path_;
  std::map<std::string, std::string>* prov_;
  std::set<std::string> used_;
};

inline void check(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw SchemaError(path, what);
}

/// Runs a module validator, reporting its failure at `path`.
template <class F>
void guarded(const std::string& path, F&& f) {
  try {
    f();
  } catch (const SchemaError&) {
    throw;
  } catch (const std::exception& e) {
    throw SchemaError(path, e.what());
  }
}

inline void read_pid(Node n, ctl::PidGains& g) {
  n.number("kp", g.kp);
  n.number("ki", g.ki);
  n.number("kd", g.kd);
  n.number("integral_limit", g.integral_limit);
  n.number("output_limit", g.output_limit);
  check(g.kp >= 0.0, n.at("kp"), "must be >= 0");
  check(g.ki >= 0.0, n.at("ki"), "must be >= 0");
  check(g.kd >= 0.0, n.at("kd"), "must be >= 0");
  check(g.integral_limit > 0.0, n.at("integral_limit"), "must be > 0");
  check(g.output_limit > 0.0, n.at("output_limit"), "must be > 0");
  n.finish();
}

inline MissionItem read_item(Node n) {
  std::string type;
  n.string("type", type);
  MissionItem item;
  if (type == "waypoint") {
    WaypointItem w;
    n.number("x", w.x_east);
    n.number("y", w.y_north);
    n.number("accept_radius", w.accept_radius);
    n.number("speed", w.speed);
    check(w.accept_radius > 0.0, n.at("accept_radius"), "must be > 0");
    check(w.speed >= 0.0, n.at("speed"), "must be >= 0");
    item = w;
  } else if (type == "velhead") {
    VelHeadLeg v;
    n.number("speed", v.speed);
    n.number("heading", v.heading);
    n.number("duration", v.duration);
    check(v.speed >= 0.0, n.at("speed"), "must be >= 0");
    check(v.heading >= 0.0 && v.heading < 360.0, n.at("heading"), "must lie in [0, 360)");
    check(v.duration > 0.0, n.at("duration"), "must be > 0");
    item = v;
  } else if (type == "loiter") {
    LoiterAt l;
    n.number("x", l.x_east);
    n.number("y", l.y_north);
    n.number("duration", l.duration);
    n.number("radius", l.radius);
    check(l.duration > 0.0, n.at("duration"), "must be > 0");
    check(!l.radius || *l.radius > 0.0, n.at("radius"), "must be > 0");
    item = l;
  } else if (type == "set_mode") {
    std::string name;
    n.string("mode", name);
    const auto m = mode_from_name(name);
    check(m.has_value(), n.at("mode"), "unknown mode '" + name + "'");
    item = SetModeItem{*m};
  } else if (type == "wait") {
    Wait w;
    n.number("duration", w.duration);
    check(w.duration > 0.0, n.at("duration"), "must be > 0");
    item = w;
  } else {
    throw SchemaError(n.at("type"), "unknown mission item type '" + type + "'");
  }
  n.finish();
  return item;
}

inline MissionPlan read_mission(Node n) {
  MissionPlan p;
  Node home = n.object("home");
  home.number("x", p.home_east);
  home.number("y", p.home_north);
  home.finish();
  for (Node& it : n.array("items")) p.items.push_back(read_item(it));
  check(!p.items.empty(), n.at("items"), "mission plan needs at least one item");
  n.finish();
  return p;
}

}  // namespace detail

inline std::filesystem::path default_preset_dir() {
  return std::filesystem::path(HELM_DATA_DIR) / "hulls";
}

inline json parse_json_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw SchemaError("", "cannot open " + file.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("", file.filename().string() + ": " + e.what());
  }
}

/// Validates a document and builds the configuration. Presets are looked up
/// as <preset_dir>/<name>.json.
inline Config load_config(const json& user_doc,
                          const std::filesystem::path& preset_dir = default_preset_dir()) {
  using detail::check;
  using detail::guarded;
  using detail::Node;
  if (!user_doc.is_object()) throw SchemaError("/", "configuration must be an object");

  Config c;
  json doc = user_doc;
  std::map<std::string, std::string> leaves;
  if (doc.contains("hull") && doc["hull"].is_object() && doc["hull"].contains("preset")) {
    check(doc["hull"]["preset"].is_string(), "/hull/preset", "expected a string");
    c.hull_preset = doc["hull"]["preset"].get<std::string>();
    const auto file = preset_dir / (c.hull_preset + ".json");
    check(std::filesystem::exists(file), "/hull/preset", "unknown preset '" + c.hull_preset + "'");
    json preset = parse_json_file(file);
    check(preset.is_object() && !(preset.contains("hull") && preset["hull"].contains("preset")),
          "/hull/preset", "preset files must be objects and cannot chain presets");
    record_leaves(preset, "", "preset:" + c.hull_preset, leaves);
    doc = merge(preset, doc);
  }
  json user_only = user_doc;
  if (user_only.contains("hull") && user_only["hull"].is_object()) user_only["hull"].erase("preset");
  record_leaves(user_only, "", "user", leaves);
  for (auto& [k, v] : leaves)
    if (!k.empty()) c.provenance[k] = v;

  std::map<std::string, std::string> defaults;
  Node root(&doc, "", &defaults);
  std::string description;
  root.string("description", description);

  // Hull and drag
  {
    Node n = root.object("hull");
    std::string preset;
    n.string("preset", preset);
    hydro::HullGeometry& g = c.vessel.drag.hull;
    g = hydro::bep_echoboat_160();
    n.number("length", g.length_L);
    n.number("beam", g.beam_B);
    n.number("draft", g.draft_D);
    n.number("displaced_volume", g.displaced_volume_nabla);
    n.number("midsection_area", g.midsection_area_AM);
    n.number("waterplane_area", g.waterplane_area_AWP);
    n.number("mass", g.mass_M);
    n.finish();
    guarded(n.path(), [&] { hydro::validate(g); });
  }
  {
    Node n = root.object("fluid");
    hydro::FluidProperties& f = c.vessel.drag.fluid;
    n.number("density", f.density_rho);
    n.number("kinematic_viscosity", f.kinematic_viscosity_nu);
    n.number("gravity", f.gravity_g);
    n.finish();
    guarded(n.path(), [&] { hydro::validate(f); });
  }
  std::optional<std::pair<double, double>> wave_calibration;
  {
    Node n = root.object("drag");
    hydro::CoefficientOverrides& o = c.vessel.drag.overrides;
    n.number("friction_coefficient", o.friction_CF);
    n.number("form_factor", o.form_factor_K);
    n.number("wetted_area", o.wetted_area_Swet);
    n.number("prismatic_coefficient", o.prismatic_Cp);
    n.number("midship_coefficient", o.midship_CM);
    n.number("waterplane_coefficient", o.waterplane_CWP);
    n.number("wave_scale", o.wave_scale_kw);
    n.boolean("low_froude_cutoff", c.vessel.drag.options.low_froude_cutoff);
    n.number("low_froude_threshold", c.vessel.drag.options.low_froude_threshold);
    if (n.has("wave_calibration")) {
      check(!n.has("wave_scale"), n.at("wave_scale"), "give wave_scale or wave_calibration, not both");
      Node w = n.object("wave_calibration");
      double speed = 0.0, drag = 0.0;
      w.number("speed", speed);
      w.number("wave_drag", drag);
      check(speed > 0.0, w.at("speed"), "must be > 0");
      check(drag > 0.0, w.at("wave_drag"), "must be > 0");
      w.finish();
      wave_calibration = {speed, drag};
    }
    n.finish();
    guarded(n.path(), [&] { hydro::validate(o); });
    if (wave_calibration) {
      guarded(n.at("wave_calibration"), [&] {
        o.wave_scale_kw = hydro::calibrate_wave_scale(c.vessel.drag.hull, c.vessel.drag.fluid,
                                                      wave_calibration->first,
                                                      wave_calibration->second, o);
      });
    }
  }

  // Thrusters and body
  {
    Node n = root.object("thruster");
    dyn::ThrusterModel& t = c.vessel.thruster;
    n.number("max_static_thrust", t.max_static_thrust);
    n.number("rated_speed", t.rated_speed);
    n.number("moving_efficiency", t.moving_efficiency_eta_e);
    n.number("separation", t.separation);
    n.integer("pwm_neutral", t.pwm_neutral, 500, 2500);
    n.integer("pwm_min", t.pwm_min, 500, 2500);
    n.integer("pwm_max", t.pwm_max, 500, 2500);
    n.integer("deadband", t.deadband, 0, 500);
    n.number("time_constant", t.response_time_constant);
    n.integer("per_side", c.vessel.thrusters_per_side, 1, 8);
    n.finish();
    guarded(n.path(), [&] { dyn::validate(t); });
  }
  {
    Node n = root.object("body");
    dyn::BodyParams& b = c.vessel.body;
    b.mass = c.vessel.drag.hull.mass_M;
    n.number("mass", b.mass);
    n.number("yaw_inertia", b.yaw_inertia);
    n.number("added_mass_surge", b.added_mass_surge);
    n.number("added_mass_sway", b.added_mass_sway);
    n.number("added_inertia_yaw", b.added_inertia_yaw);
    n.number("sway_linear", b.d_v1);
    n.number("sway_quadratic", b.d_v2);
    n.number("yaw_linear", b.d_r1);
    n.number("yaw_quadratic", b.d_r2);
    n.number("surge_linear", b.d_u1);
    guarded(n.path(), [&] { dyn::validate(b); });
    if (n.has("surge_calibration")) {
      check(!n.has("surge_linear"), n.at("surge_linear"),
            "give surge_linear or surge_calibration, not both");
      Node s = n.object("surge_calibration");
      int thrusters = 2;
      double top = 0.0;
      s.integer("thrusters", thrusters, 1, 16);
      s.number("top_speed", top);
      check(top > 0.0, s.at("top_speed"), "must be > 0");
      s.finish();
      guarded(s.path(), [&] { b.d_u1 = dyn::calibrate_surge_damping(c.vessel, thrusters, top); });
    }
    n.finish();
  }

  // Environment and sensors
  {
    Node n = root.object("environment");
    dyn::EnvironmentField& e = c.environment;
    n.number("current_east", e.current_east);
    n.number("current_north", e.current_north);
    n.number("wind_force_east", e.wind_force_east);
    n.number("wind_force_north", e.wind_force_north);
    n.integer("seed", e.noise_seed, 0, std::numeric_limits<long long>::max());
    n.boolean("position_fix", c.position_fix);
    n.finish();
  }
  {
    Node n = root.object("sensors");
    dyn::EnvironmentField& e = c.environment;
    n.number("gps_sigma", e.gps_sigma);
    n.number("compass_sigma", e.compass_sigma);
    n.number("speed_sigma", e.speed_sigma);
    n.number("gyro_sigma", e.gyro_sigma);
    guarded(n.path(), [&] { dyn::validate(e); });
    Node l = n.object("lidar");
    l.integer("samples", c.lidar.samples_per_sweep, 1, 100000);
    l.number("max_range", c.lidar.max_range);
    l.number("sigma", c.lidar.range_sigma);
    l.integer("quality", c.lidar.quality, 0, 255);
    check(c.lidar.max_range > 0.0, l.at("max_range"), "must be > 0");
    check(c.lidar.range_sigma >= 0.0, l.at("sigma"), "must be >= 0");
    l.finish();
    Node s = n.object("sonar");
    s.number("mount_angle", c.sonar.mount_angle);
    s.number("max_range", c.sonar.max_range);
    s.number("sigma", c.sonar.range_sigma);
    s.number("water_depth", c.sonar.water_depth);
    check(c.sonar.mount_angle >= 0.0 && c.sonar.mount_angle <= 90.0, s.at("mount_angle"),
          "must lie in [0, 90]");
    check(c.sonar.max_range > 0.0, s.at("max_range"), "must be > 0");
    check(c.sonar.range_sigma >= 0.0, s.at("sigma"), "must be >= 0");
    check(c.sonar.water_depth > 0.0, s.at("water_depth"), "must be > 0");
    s.finish();
    n.finish();
  }
  {
    Node n = root.object("world");
    for (Node& o : n.array("circles")) {
      world::Circle x;
      o.number("x", x.x_east);
      o.number("y", x.y_north);
      o.number("radius", x.radius);
      check(x.radius > 0.0, o.at("radius"), "must be > 0");
      o.finish();
      c.world.circles.push_back(x);
    }
    for (Node& o : n.array("segments")) {
      world::Segment x;
      o.number("x1", x.x1);
      o.number("y1", x.y1);
      o.number("x2", x.x2);
      o.number("y2", x.y2);
      o.finish();
      c.world.segments.push_back(x);
    }
    for (Node& o : n.array("turbulence")) {
      world::TurbulenceZone x;
      o.number("x", x.x_east);
      o.number("y", x.y_north);
      o.number("radius", x.radius);
      o.number("confidence", x.confidence);
      check(x.radius > 0.0, o.at("radius"), "must be > 0");
      check(x.confidence >= 0.0 && x.confidence <= 100.0, o.at("confidence"),
            "must lie in [0, 100]");
      o.finish();
      c.world.turbulence.push_back(x);
    }
    n.finish();
  }

  // Perception
  {
    Node n = root.object("perception");
    perception::PerceptionParams& p = c.perception;
    n.boolean("enabled", c.perception_enabled);
    n.integer("quality_min", p.quality_min, 0, 255);
    n.number("weight_scale", p.weight_scale);
    n.integer("sonar_window", p.sonar_window, 1, 1000);
    n.number("sonar_confidence_min", p.sonar_confidence_min);
    n.integer("min_range_cm", p.limits.min_range_cm, 0, perception::kNoReading - 1);
    n.integer("max_range_cm", p.limits.max_range_cm, 1, perception::kNoReading - 1);
    n.boolean("obstacle_avoidance", c.autopilot.obstacle_avoidance);
    check(p.weight_scale > 0.0, n.at("weight_scale"), "must be > 0");
    check(p.limits.min_range_cm <= p.limits.max_range_cm, n.at("min_range_cm"),
          "must not exceed max_range_cm");
    Node x = n.object("proximity");
    perception::ProximityParams& q = p.proximity;
    x.number("slow_distance", q.slow_distance);
    x.number("stop_distance", q.stop_distance);
    x.integer("cone_half_width", q.cone_half_width, 0, 36);
    x.number("slow_factor", q.slow_factor);
    check(q.stop_distance >= 0.0, x.at("stop_distance"), "must be >= 0");
    check(q.slow_distance > q.stop_distance, x.at("slow_distance"),
          "must exceed stop_distance");
    check(q.slow_factor > 0.0 && q.slow_factor < 1.0, x.at("slow_factor"), "must lie in (0, 1)");
    x.finish();
    n.finish();
    c.autopilot.proximity = q;
  }

  // Autopilot
  {
    Node n = root.object("control");
    ctl::AutopilotParams& a = c.autopilot;
    detail::read_pid(n.object("heading_outer"), a.heading_outer);
    detail::read_pid(n.object("heading_inner"), a.heading_inner);
    detail::read_pid(n.object("speed"), a.speed);
    n.boolean("steering_priority", a.steering_priority);
    n.number("l1_distance", a.l1_distance);
    n.number("approach_gain", a.approach_gain);
    n.number("rtl_speed", a.rtl_speed);
    check(a.l1_distance > 0.0, n.at("l1_distance"), "must be > 0");
    check(a.approach_gain > 0.0, n.at("approach_gain"), "must be > 0");
    check(a.rtl_speed >= 0.0, n.at("rtl_speed"), "must be >= 0");
    Node l = n.object("loiter");
    l.number("radius", a.rtl_loiter_radius);
    l.number("hold_fraction", a.loiter.hold_fraction);
    l.number("creep_gain", a.loiter.creep_gain);
    l.number("max_creep_speed", a.loiter.max_creep_speed);
    l.number("heading_lock_distance", a.loiter.heading_lock_distance);
    check(a.rtl_loiter_radius > 0.0, l.at("radius"), "must be > 0");
    check(a.loiter.hold_fraction >= 0.0 && a.loiter.hold_fraction < 1.0,
          l.at("hold_fraction"), "must lie in [0, 1)");
    check(a.loiter.creep_gain > 0.0, l.at("creep_gain"), "must be > 0");
    check(a.loiter.max_creep_speed > 0.0, l.at("max_creep_speed"), "must be > 0");
    check(a.loiter.heading_lock_distance >= 0.0, l.at("heading_lock_distance"), "must be >= 0");
    l.finish();
    Node f = n.object("failsafe");
    f.number("link_timeout", a.failsafe.link_timeout);
    f.number("battery_threshold", a.failsafe.battery_threshold);
    check(a.failsafe.link_timeout > 0.0, f.at("link_timeout"), "must be > 0");
    check(a.failsafe.battery_threshold >= 0.0 && a.failsafe.battery_threshold < 1.0,
          f.at("battery_threshold"), "must lie in [0, 1)");
    f.finish();
    n.finish();
    guarded(n.path(), [&] { ctl::validate(a); });
  }

  // Battery
  {
    Node n = root.object("battery");
    BatteryParams& b = c.battery;
    n.number("capacity_ah", b.capacity_ah);
    n.number("voltage", b.voltage);
    n.number("hotel_current", b.hotel_current);
    n.number("current_per_newton", b.current_per_newton);
    n.number("initial_fraction", b.initial_fraction);
    check(b.capacity_ah > 0.0, n.at("capacity_ah"), "must be > 0");
    check(b.voltage > 0.0, n.at("voltage"), "must be > 0");
    check(b.hotel_current >= 0.0, n.at("hotel_current"), "must be >= 0");
    check(b.initial_fraction > 0.0 && b.initial_fraction <= 1.0, n.at("initial_fraction"),
          "must lie in (0, 1]");
    if (n.has("runtime_calibration")) {
      check(!n.has("current_per_newton"), n.at("current_per_newton"),
            "give current_per_newton or runtime_calibration, not both");
      Node r = n.object("runtime_calibration");
      double speed = 0.0, hours = 0.0;
      r.number("cruise_speed", speed);
      r.number("runtime_hours", hours);
      check(speed > 0.0, r.at("cruise_speed"), "must be > 0");
      check(hours > 0.0, r.at("runtime_hours"), "must be > 0");
      r.finish();
      const double thrust = cruise_thrust(c.vessel, speed);
      b.current_per_newton = (b.capacity_ah / hours - b.hotel_current) / thrust;
      check(b.current_per_newton > 0.0, r.at("runtime_hours"),
            "hotel load alone drains the pack faster than this");
    }
    check(b.current_per_newton >= 0.0, n.at("current_per_newton"), "must be >= 0");
    n.finish();
  }

  // Service and run
  {
    Node n = root.object("service");
    ServiceParams& s = c.service;
    n.integer("tcp_port", s.tcp_port, 0, 65535);
    n.integer("websocket_port", s.websocket_port, 0, 65535);
    n.number("heartbeat_hz", s.heartbeat_hz);
    n.number("state_hz", s.state_hz);
    n.number("obstacle_hz", s.obstacle_hz);
    n.number("timescale", s.timescale);
    n.number("waypoint_speed", s.waypoint_speed);
    for (const char* k : {"heartbeat_hz", "state_hz", "obstacle_hz"}) {
      const double hz = k[0] == 'h' ? s.heartbeat_hz : k[0] == 's' ? s.state_hz : s.obstacle_hz;
      const double ticks = 10.0 / hz;
      check(hz > 0.0 && hz <= 10.0 && std::abs(ticks - std::round(ticks)) < 1e-9, n.at(k),
            "must divide the 10 Hz control rate");
    }
    check(s.timescale >= 0.0, n.at("timescale"), "must be >= 0 (0 = unpaced)");
    check(s.waypoint_speed > 0.0, n.at("waypoint_speed"), "must be > 0");
    n.finish();
  }
  {
    Node n = root.object("run");
    n.number("timeout", c.run.timeout);
    n.number("settle_window", c.run.settle_window);
    check(c.run.timeout > 0.0, n.at("timeout"), "must be > 0");
    check(c.run.settle_window >= 0.0, n.at("settle_window"), "must be >= 0");
    n.finish();
  }
  if (root.has("mission")) c.mission = detail::read_mission(root.object("mission"));
  root.finish();

  for (auto& [k, v] : defaults) c.provenance.emplace(k, v);
  return c;
}

/// Loads a document from disk. Presets are taken from a "hulls" directory
/// next to the file if there is one, else from the installed data directory.
inline Config load_config_file(const std::filesystem::path& file) {
  const json doc = parse_json_file(file);
  const auto local = file.parent_path() / "hulls";
  return load_config(doc, std::filesystem::is_directory(local) ? local : default_preset_dir());
}

/// A standalone plan document: {"home": {...}, "items": [...]}.
inline MissionPlan load_plan(const json& doc) {
  if (!doc.is_object()) throw SchemaError("/", "plan must be an object");
  return detail::read_mission(detail::Node(&doc, "", nullptr));
}

inline MissionPlan load_plan_file(const std::filesystem::path& file) {
  return load_plan(parse_json_file(file));
}

inline std::filesystem::path default_config_path() {
  return std::filesystem::path(HELM_DATA_DIR) / "bep-default.json";
}

}  // namespace helm::cfg

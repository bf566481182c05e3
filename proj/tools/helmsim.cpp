// helmsim: command line front end.
//
//   helmsim size    [--config F] [--speed V] [--json]
//   helmsim sim     [--config F] [--plan P] [--seed N] [--out PREFIX]
//   helmsim serve   [--config F] [--timescale X] [--tcp-port N] [--ws-port N]
//   helmsim report  LOG.jsonl [--plan P] [--settle S] [--json]
//   helmsim vectors [--out F]
//
// Exit codes: 0 success, 1 mission timed out, 2 config or input error,
// 3 mission ended by a failsafe.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "helm/config.hpp"
#include "helm/mission.hpp"
#include "helm/service.hpp"
#include "helm/vectors.hpp"

using namespace helm;

namespace {

constexpr int kInputError = 2;

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

cfg::Config load(const std::string& path, std::optional<std::uint64_t> seed) {
  cfg::Config c = cfg::load_config_file(path.empty() ? cfg::default_config_path() : std::filesystem::path(path));
  if (seed) c.environment.noise_seed = *seed;
  return c;
}

void write_file(const std::string& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  body(os);
  if (!os) throw std::runtime_error("write failed: " + path);
  std::fprintf(stderr, "wrote %s\n", path.c_str());
}

void print_metrics(const mission::Metrics& m) {
  if (m.speed_rmse)
    std::printf("steady speed rmse   %.3f m/s\nsteady heading rmse %.2f deg  (%zu samples)\n",
                *m.speed_rmse, *m.heading_rmse, m.steady_samples);
  for (const auto& l : m.legs) {
    std::printf("leg %-3zu cross-track mean %.2f rms %.2f max %.2f m", l.item, l.mean, l.rms, l.max);
    if (l.time_to_waypoint) std::printf("  reached after %.1f s", *l.time_to_waypoint);
    std::printf("\n");
  }
  if (m.loiter_max_excursion) std::printf("loiter max excursion %.2f m\n", *m.loiter_max_excursion);
  std::printf("energy %.1f Wh\n", m.energy_wh);
}

// ---------------------------------------------------------------------------

int run_size(const std::string& config, double speed, double safety, bool as_json) {
  const cfg::Config c = load(config, std::nullopt);
  const dyn::VesselModel& v = c.vessel;
  const hydro::DragBreakdown d = v.drag.breakdown(speed);
  const hydro::ThrustPlan p = hydro::thrust_plan(d.total_RT, v.thruster.moving_efficiency_eta_e,
                                                 safety, v.thruster.max_static_thrust);
  const double top2 = dyn::equilibrium_speed(2, v);
  if (as_json) {
    const cfg::json j = {
        {"hull_preset", c.hull_preset},
        {"speed", speed},
        {"reynolds", d.reynolds_Rn},
        {"froude", d.froude_Fn},
        {"friction_coefficient", d.friction_CF},
        {"form_factor", d.form_factor_K},
        {"wetted_area", d.wetted_area_Swet},
        {"prismatic_coefficient", d.prismatic_Cp},
        {"midship_coefficient", d.midship_CM},
        {"waterplane_coefficient", d.waterplane_CWP},
        {"viscous_drag", d.viscous_RV},
        {"wave_drag", d.wave_RW},
        {"air_drag", d.air_RA},
        {"total_drag", d.total_RT},
        {"coefficient_warning", d.coefficient_warning},
        {"nominal_thrust", p.nominal_thrust_Tn},
        {"final_thrust", p.final_thrust_Tf},
        {"thruster_count", p.thruster_count},
        {"top_speed_two_thrusters", top2}};
    std::cout << j.dump(2) << '\n';
    return 0;
  }
  std::printf("hull %s at %.2f m/s\n", c.hull_preset.empty() ? "(custom)" : c.hull_preset.c_str(), speed);
  std::printf("  Reynolds %.4e  Froude %.4f\n", d.reynolds_Rn, d.froude_Fn);
  std::printf("  friction coeff %.6f  form factor %.4f  wetted area %.3f m2\n", d.friction_CF,
              d.form_factor_K, d.wetted_area_Swet);
  std::printf("  Cp %.4f  CM %.4f  CWP %.4f%s\n", d.prismatic_Cp, d.midship_CM, d.waterplane_CWP,
              d.coefficient_warning ? "  (coefficient outside (0, 1])" : "");
  std::printf("  viscous %.2f N  wave %.2f N  air %.2f N  total %.2f N\n", d.viscous_RV, d.wave_RW,
              d.air_RA, d.total_RT);
  std::printf("thrust: nominal %.2f N  with safety x%.2f %.2f N  -> %d units of %.0f N\n",
              p.nominal_thrust_Tn, safety, p.final_thrust_Tf, p.thruster_count,
              v.thruster.max_static_thrust);
  std::printf("top speed with two thrusters %.2f m/s\n", top2);
  return 0;
}

int run_sim(const std::string& config, const std::string& plan_path,
            std::optional<std::uint64_t> seed, const std::string& out) {
  const cfg::Config c = load(config, seed);
  cfg::MissionPlan plan;
  if (!plan_path.empty())
    plan = cfg::load_plan_file(plan_path);
  else if (c.mission)
    plan = *c.mission;
  else
    throw SchemaError("/mission", "no mission: pass --plan or add a mission block");

  const mission::RunLog log = mission::run_mission(c, plan);
  const mission::Metrics m = mission::compute_metrics(log, plan, c.run.settle_window);
  std::printf("%s after %.1f s, %zu ticks, %zu events\n", mission::to_string(log.termination),
              log.end_time, log.records.size(), log.events.size());
  print_metrics(m);
  if (!out.empty()) {
    write_file(out + ".jsonl", [&](std::ostream& os) { mission::write_jsonl(log, os); });
    write_file(out + ".csv", [&](std::ostream& os) { mission::write_csv(log, os); });
    write_file(out + ".plot.json",
               [&](std::ostream& os) { os << mission::plot_data(log, m).dump() << '\n'; });
  }
  return mission::exit_code(log.termination);
}

int run_serve(const std::string& config, std::optional<std::uint64_t> seed,
              std::optional<double> timescale, std::optional<int> tcp_port,
              std::optional<int> ws_port, double duration) {
  cfg::Config c = load(config, seed);
  if (timescale) c.service.timescale = *timescale;
  if (tcp_port) c.service.tcp_port = *tcp_port;
  if (ws_port) c.service.websocket_port = *ws_port;
  if (c.service.timescale < 0.0) throw SchemaError("/service/timescale", "must be >= 0");

  service::Service svc(c);
  svc.on_event([](const ctl::Event& e) {
    std::fprintf(stderr, "[%8.1f] %s %s -> %s (%s)\n", e.t, ctl::to_string(e.kind),
                 ctl::to_string(e.from), ctl::to_string(e.to), e.cause.c_str());
  });
  svc.start();
  std::printf("helm-link tcp://0.0.0.0:%u  ws://0.0.0.0:%u/link  timescale %g\n", svc.tcp_port(),
              svc.websocket_port(), c.service.timescale);
  std::fflush(stdout);

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  const auto start = std::chrono::steady_clock::now();
  while (!g_stop) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    if (duration > 0.0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() >= duration)
      break;
  }
  svc.stop();
  std::printf("stopped at sim time %.1f s\n", svc.sim_time());
  return 0;
}

int run_report(const std::string& log_path, const std::string& plan_path, double settle,
               bool as_json) {
  std::ifstream is(log_path);
  if (!is) throw std::runtime_error("cannot read " + log_path);
  const mission::RunLog log = mission::read_jsonl(is);
  const cfg::MissionPlan plan = plan_path.empty() ? cfg::MissionPlan{} : cfg::load_plan_file(plan_path);
  const mission::Metrics m = mission::compute_metrics(log, plan, settle);
  if (as_json) {
    std::cout << mission::metrics_json(m).dump(2) << '\n';
    return 0;
  }
  std::printf("%s: %s after %.1f s (%zu ticks, seed %llu, hull %s)\n", log_path.c_str(),
              mission::to_string(log.termination), log.end_time, log.records.size(),
              static_cast<unsigned long long>(log.seed), log.hull_preset.c_str());
  print_metrics(m);
  return 0;
}

int run_vectors(const std::string& out) {
  const std::string text = proto::test_vectors().dump(1) + "\n";
  if (out.empty() || out == "-") {
    std::cout << text;
    return 0;
  }
  write_file(out, [&](std::ostream& os) { os << text; });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"helm: survey vessel sizing, simulation and link service"};
  app.require_subcommand(1);

  std::string config;
  std::optional<std::uint64_t> seed;

  auto* size = app.add_subcommand("size", "hull resistance and thruster sizing report");
  double speed = hydro::kBepDesignSpeed, safety = 1.25;
  bool size_json = false;
  size->add_option("--config", config, "config document")->check(CLI::ExistingFile);
  size->add_option("--speed", speed, "design speed, m/s")->capture_default_str()->check(CLI::PositiveNumber);
  size->add_option("--safety", safety, "thrust safety factor")->capture_default_str();
  size->add_flag("--json", size_json, "machine-readable output");

  auto* sim = app.add_subcommand("sim", "run a mission headless");
  std::string plan, out;
  sim->add_option("--config", config, "config document")->check(CLI::ExistingFile);
  sim->add_option("--plan", plan, "mission plan (else the config's mission block)")->check(CLI::ExistingFile);
  sim->add_option("--seed", seed, "noise seed, overrides the config");
  sim->add_option("--out", out, "write PREFIX.jsonl, PREFIX.csv and PREFIX.plot.json");

  auto* serve = app.add_subcommand("serve", "run the vessel behind the TCP and WebSocket link");
  std::optional<double> timescale;
  std::optional<int> tcp_port, ws_port;
  double duration = 0.0;
  serve->add_option("--config", config, "config document")->check(CLI::ExistingFile);
  serve->add_option("--timescale", timescale, "sim seconds per wall second, 0 = unpaced");
  serve->add_option("--tcp-port", tcp_port, "raw TCP port")->check(CLI::Range(0, 65535));
  serve->add_option("--ws-port", ws_port, "WebSocket port")->check(CLI::Range(0, 65535));
  serve->add_option("--seed", seed, "noise seed, overrides the config");
  serve->add_option("--duration", duration, "stop after this many wall seconds (0 = until signalled)");

  auto* report = app.add_subcommand("report", "metrics from a JSONL run log");
  std::string log_path;
  double settle = 20.0;
  bool report_json = false;
  report->add_option("log", log_path, "run log (.jsonl)")->required()->check(CLI::ExistingFile);
  report->add_option("--plan", plan, "plan the log was run against (for per-leg metrics)")->check(CLI::ExistingFile);
  report->add_option("--settle", settle, "seconds skipped at the start of each steady segment")->capture_default_str();
  report->add_flag("--json", report_json, "machine-readable output");

  auto* vectors = app.add_subcommand("vectors", "write the protocol test-vector file");
  vectors->add_option("--out", out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kInputError;
  }

  try {
    if (*size) return run_size(config, speed, safety, size_json);
    if (*sim) return run_sim(config, plan, seed, out);
    if (*serve) return run_serve(config, seed, timescale, tcp_port, ws_port, duration);
    if (*report) return run_report(log_path, plan, settle, report_json);
    if (*vectors) return run_vectors(out);
  } catch (const SchemaError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kInputError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInputError;
  }
  return 0;
}

// swarm: simulate second-order self-propelled swarms, certify their
// ultimate bounds, analyze trajectories, and render SVG figures.
//
// Exit codes: 0 success, 2 input error, 3 numerical blow-up, 4 certificate
// failure.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "swarm/analysis.hpp"
#include "swarm/certify.hpp"
#include "swarm/errors.hpp"
#include "swarm/io/config.hpp"
#include "swarm/io/csv.hpp"
#include "swarm/io/svg.hpp"
#include "swarm/scenarios.hpp"
#include "swarm/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace swarm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitBlowUp = 3;
constexpr int kExitCertificate = 4;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return json::parse(in);
}

json bounds_to_json(const analysis::BoundsReport& b) {
  return {{"t_start", b.t_start},
          {"t_end", b.t_end},
          {"sup_speed", b.sup_speed},
          {"sup_accel", b.sup_accel},
          {"sup_center_offset", b.sup_center_offset},
          {"per_agent_speed", b.per_agent_speed},
          {"per_agent_accel", b.per_agent_accel},
          {"per_agent_offset", b.per_agent_offset},
          {"drift_slope", b.drift_slope}};
}

json state_to_json(const model::LienardState& s) {
  return {{"x", io::matrix_to_json(s.x)}, {"y", io::matrix_to_json(s.y)}};
}

// Runs the integration and writes trajectory.csv / analysis.json /
// manifest.json into out_dir. Returns the trajectory for further use.
integrate::Trajectory run_simulation(const io::RunConfig& rc, const fs::path& out_dir,
                                     const std::string& command,
                                     const std::vector<scenarios::CheckResult>* checks_in,
                                     const scenarios::Scenario* scenario) {
  const auto start = std::chrono::steady_clock::now();
  fs::create_directories(out_dir);

  const auto rhs = model::swarm_rhs(rc.model);
  const auto t_int0 = std::chrono::steady_clock::now();
  const auto traj = integrate::integrate(rhs, rc.initial.t,
                                         model::pack(rc.initial.r, rc.initial.v),
                                         rc.integrator);
  const double integrate_seconds = seconds_since(t_int0);

  io::write_trajectory_csv(out_dir / "trajectory.csv", traj, rc.model.n, rc.model.d);

  json analysis_doc;
  const auto bounds = analysis::tail_bounds(rc.model, traj, rc.window_fraction);
  analysis_doc["tail_bounds"] = bounds_to_json(bounds);
  if (rc.model.is_linear()) {
    analysis_doc["energy_drift"] =
        analysis::energy_drift(rc.model, traj, analysis::TrajectoryKind::Swarm);
  }
  {
    const auto metrics = analysis::ring_metrics(rc.model, traj, rc.window_fraction);
    analysis_doc["ring_metrics"] = {{"mean_speed", metrics.mean_speed},
                                    {"mean_radius", metrics.mean_radius},
                                    {"radius_stddev", metrics.radius_stddev}};
  }

  std::vector<scenarios::CheckResult> checks;
  if (checks_in) {
    checks = *checks_in;
  } else if (scenario) {
    checks = scenarios::run_checks(*scenario, traj);
  }
  if (!checks.empty()) {
    json arr = json::array();
    for (const auto& c : checks) {
      arr.push_back({{"id", c.id}, {"pass", c.pass}, {"value", c.value},
                     {"detail", c.detail}});
      std::cout << (c.pass ? "[check PASS] " : "[check FAIL] ") << c.id << ": " << c.detail
                << '\n';
    }
    analysis_doc["checks"] = arr;
  }
  write_json(out_dir / "analysis.json", analysis_doc);

  json manifest = {{"version", kVersion},
                   {"command", command},
                   {"seed", rc.seed},
                   {"config", rc.resolved},
                   {"outputs", {"trajectory.csv", "analysis.json", "manifest.json"}},
                   {"timings",
                    {{"integrate_seconds", integrate_seconds},
                     {"total_seconds", seconds_since(start)}}},
                   {"steps", {{"accepted", traj.accepted}, {"rejected", traj.rejected}}}};
  write_json(out_dir / "manifest.json", manifest);

  std::cout << "wrote " << (out_dir / "trajectory.csv").string() << " (" << traj.size()
            << " samples, " << traj.accepted << " steps)\n";
  return traj;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir) {
  const auto rc = io::load_config(config_path);
  run_simulation(rc, out_dir, "simulate", nullptr, nullptr);
  return kExitOk;
}

int cmd_certify(const std::string& config_path, const std::string& out_dir,
                std::size_t samples) {
  const auto rc = io::load_config(config_path);
  fs::create_directories(out_dir);
  json cert_doc;
  int code = kExitOk;

  if (rc.model.is_linear()) {
    // The manifold energies come from the configured initial condition, so
    // the certificate matches the trajectories this config actually runs.
    const auto deriv = model::rhs_linear(rc.model, rc.initial);
    const model::LienardState initial_lienard{rc.initial.t, rc.initial.v, deriv.dv};
    const auto energies = certify::manifold_energies(rc.model, initial_lienard);

    const auto params = certify::select_params(rc.model, energies);
    const auto check = certify::verify_params(rc.model, energies, params);
    const auto cert = certify::verify_decrease(rc.model, energies, params, samples, rc.seed);

    const char* status = cert.status == certify::CertificateStatus::Pass     ? "pass"
                         : cert.status == certify::CertificateStatus::Vacuous ? "vacuous"
                                                                              : "fail";
    cert_doc = {{"variant", "linear"},
                {"a", params.a},
                {"delta", params.delta},
                {"b", params.b},
                {"C1", params.C1},
                {"C2", params.C2},
                {"C3", params.C3},
                {"C4", params.C4},
                {"W_a", params.W_a},
                {"K_a", params.K_a},
                {"energy_rank", energies.effective_rank},
                {"params_check",
                 {{"constants_consistent", check.constants_consistent},
                  {"speed_inequality", check.speed_inequality},
                  {"delta_inequality", check.delta_inequality},
                  {"accel_inequality", check.accel_inequality},
                  {"speed_margin", check.speed_margin},
                  {"delta_product", check.delta_product},
                  {"accel_margin", check.accel_margin}}},
                {"samples", cert.samples_checked},
                {"max_vdot", cert.max_vdot_outside_box},
                {"status", status},
                {"position_offset_bound", cert.position_offset_bound},
                {"note", cert.ultimate_bound_note}};
    if (cert.witness) cert_doc["witness"] = state_to_json(*cert.witness);
    if (!check.ok() || cert.status == certify::CertificateStatus::Fail) code = kExitCertificate;
    std::cout << "certificate: " << status << " (a=" << params.a << ", delta=" << params.delta
              << ", b=" << params.b << ", max_vdot=" << cert.max_vdot_outside_box << ")\n";
  } else {
    const auto cert = certify::theorem2_velocity_bound(rc.model);
    json q_abs = json::array();
    for (double qk : cert.q) q_abs.push_back(-qk);
    cert_doc = {{"variant", "bounded"},
                {"m", cert.m},
                {"q", cert.q},
                {"q_min_magnitude", q_abs},
                {"q_sum", cert.q_sum},
                {"M1", cert.m1},
                {"status", "pass"}};
    try {
      const auto window = certify::dispersal_window(rc.model.propulsion.law(0));
      cert_doc["dispersal_window"] = {{"depth", window.depth},
                                      {"v_lo", window.v_lo},
                                      {"v_hi", window.v_hi}};
    } catch (const UsageError&) {
      // No dip below zero: the window does not exist for this propulsion.
    }
    std::cout << "certificate: pass (m=" << cert.m << ", M1=" << cert.m1 << ")\n";
  }

  cert_doc["toolkit_version"] = kVersion;
  write_json(fs::path(out_dir) / "certificate.json", cert_doc);
  std::cout << "wrote " << (fs::path(out_dir) / "certificate.json").string() << '\n';
  return code;
}

int cmd_scenario_list() {
  for (const auto& entry : scenarios::catalog()) {
    std::cout << entry.name << ": " << entry.description << "\n  defaults:";
    for (const auto& [key, value] : entry.defaults) std::cout << ' ' << key << '=' << value;
    std::cout << '\n';
  }
  return kExitOk;
}

int cmd_scenario_run(const std::string& name, const std::vector<std::string>& sets,
                     const std::string& out_dir) {
  std::map<std::string, double> overrides;
  for (const auto& kv : sets) {
    const auto pos = kv.find('=');
    if (pos == std::string::npos)
      throw InputError("--set expects key=value, got '" + kv + "'");
    try {
      overrides[kv.substr(0, pos)] = std::stod(kv.substr(pos + 1));
    } catch (const std::exception&) {
      throw InputError("--set value in '" + kv + "' is not a number");
    }
  }

  json doc = {{"scenario", {{"name", name}}}};
  if (!overrides.empty()) {
    json set;
    for (const auto& [key, value] : overrides) set[key] = value;
    doc["scenario"]["set"] = set;
  }
  const auto rc = io::config_from_json(doc);
  const auto scenario = scenarios::build(name, overrides);
  run_simulation(rc, out_dir, "scenario run " + name, nullptr, &scenario);
  return kExitOk;
}

int cmd_plot(const std::string& input, const std::string& kind, const std::string& output) {
  if (kind != "traces" && kind != "lyapunov" && kind != "energy")
    throw InputError("unknown plot kind '" + kind + "' (traces|lyapunov|energy)");

  fs::path in_path(input);
  const fs::path run_dir = fs::is_directory(in_path) ? in_path : in_path.parent_path();
  const fs::path csv_path =
      fs::is_directory(in_path) ? in_path / "trajectory.csv" : in_path;

  const json manifest = read_json(run_dir / "manifest.json");
  const auto rc = io::config_from_json(manifest.at("config"));
  const auto csv = io::read_trajectory_csv(csv_path);
  if (csv.traj.size() == 0) throw InputError("trajectory is empty");
  if (csv.block != rc.model.n * rc.model.d)
    throw InputError("trajectory columns do not match the manifest's model shape");

  if (kind == "traces") {
    io::write_traces_svg(output, rc.model, csv.traj, rc.window_fraction);
  } else if (kind == "lyapunov") {
    certify::LyapunovParams params;
    const fs::path cert_path = run_dir / "certificate.json";
    bool have = false;
    if (fs::exists(cert_path)) {
      const json cert = read_json(cert_path);
      if (cert.value("variant", "") == std::string("linear")) {
        params.a = cert.at("a").get<double>();
        params.delta = cert.at("delta").get<double>();
        params.b = cert.at("b").get<double>();
        have = true;
      }
    }
    if (!have) {
      const auto deriv = model::rhs_linear(rc.model, rc.initial);
      const model::LienardState lie{rc.initial.t, rc.initial.v, deriv.dv};
      params = certify::select_params(rc.model, certify::manifold_energies(rc.model, lie));
    }
    io::write_lyapunov_svg(output, certify::lyapunov_trace(rc.model, params, csv.traj));
  } else {
    const auto& proj = rc.model.linear().projection;
    std::vector<double> drift(csv.traj.size(), 0.0);
    linalg::Matrix e0;
    for (std::size_t i = 0; i < csv.traj.size(); ++i) {
      const auto s = model::unpack_swarm(csv.traj.times[i], csv.traj.states[i], rc.model.n,
                                         rc.model.d);
      const auto dv = model::rhs_swarm(rc.model, s).dv;
      const model::LienardState lie{s.t, s.v, dv};
      const auto e = certify::manifold_energies(rc.model, lie).rows;
      if (i == 0) {
        e0 = e;
        continue;
      }
      double worst = 0.0;
      for (std::size_t l = 0; l < proj.Q.rows(); ++l) {
        const auto diff = e - e0;
        worst = std::max(worst, linalg::norm(diff.row(l)));
      }
      drift[i] = worst;
    }
    io::write_energy_svg(output, csv.traj.times, drift);
  }
  std::cout << "wrote " << output << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"second-order self-propelled swarm simulation and certification"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", plot_in, plot_kind = "traces", plot_out;
  std::size_t samples = 10000;
  std::string scenario_name;
  std::vector<std::string> sets;

  auto* simulate = app.add_subcommand("simulate", "integrate a configured model");
  simulate->add_option("--config", config_path, "JSON config file")->required();
  simulate->add_option("--out", out_dir, "output directory");

  auto* certify_cmd = app.add_subcommand("certify", "build an ultimate-boundedness certificate");
  certify_cmd->add_option("--config", config_path, "JSON config file")->required();
  certify_cmd->add_option("--out", out_dir, "output directory");
  certify_cmd->add_option("--samples", samples, "manifold samples for the decrease check");

  auto* scenario_cmd = app.add_subcommand("scenario", "catalog of named scenarios");
  auto* list_cmd = scenario_cmd->add_subcommand("list", "list catalog entries");
  auto* run_cmd = scenario_cmd->add_subcommand("run", "build and simulate a scenario");
  run_cmd->add_option("name", scenario_name, "catalog entry name")->required();
  run_cmd->add_option("--set", sets, "override, key=value (repeatable)");
  run_cmd->add_option("--out", out_dir, "output directory");
  scenario_cmd->require_subcommand(1);

  auto* plot_cmd = app.add_subcommand("plot", "render an SVG from run outputs");
  plot_cmd->add_option("--in", plot_in, "run directory or trajectory.csv")->required();
  plot_cmd->add_option("--kind", plot_kind, "traces|lyapunov|energy");
  plot_cmd->add_option("--out", plot_out, "output SVG path")->required();

  try {
    app.parse(argc, argv);
    if (simulate->parsed()) return cmd_simulate(config_path, out_dir);
    if (certify_cmd->parsed()) return cmd_certify(config_path, out_dir, samples);
    if (scenario_cmd->parsed()) {
      if (list_cmd->parsed()) return cmd_scenario_list();
      if (run_cmd->parsed()) return cmd_scenario_run(scenario_name, sets, out_dir);
    }
    if (plot_cmd->parsed()) return cmd_plot(plot_in, plot_kind, plot_out);
    return kExitInput;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  } catch (const BlowUpError& e) {
    std::cerr << "numerical blow-up: " << e.what() << '\n';
    return kExitBlowUp;
  } catch (const StiffnessError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitBlowUp;
  } catch (const CertificationError& e) {
    std::cerr << "certification failure: " << e.what() << '\n';
    return kExitCertificate;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
}

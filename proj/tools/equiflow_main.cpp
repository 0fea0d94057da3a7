#include <CLI11.hpp>
#include <iostream>

#include "equiflow/commands.hpp"

namespace fs = std::filesystem;

namespace {

std::vector<double> parse_scales(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    out.push_back(std::stod(item));
  }
  return out;
}

std::vector<std::string> parse_names(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(item.substr(b, item.find_last_not_of(" \t") - b + 1));
  }
  return out;
}

// Directory for commands that read an existing run.
fs::path run_dir(const std::string& out_flag) {
  if (const char* env = std::getenv("EQUIFLOW_OUT"); env && *env) return env;
  return out_flag.empty() ? fs::path("equiflow_out") : fs::path(out_flag);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equivariant Lagrangian mean curvature flow: simulate, analyze, verify"};
  app.set_version_flag("--version", equiflow::kToolVersion);
  app.require_subcommand(1);

  std::string config_path, out_flag, scales_text, monitors_text;
  std::vector<std::string> sweep_configs;
  bool resume = false;
  double radius = 1.0;

  auto* run = app.add_subcommand("run", "Evolve the configured initial curve");
  run->add_option("--config", config_path, "Config file (key = value lines)")->required();
  run->add_option("--out", out_flag, "Output directory (EQUIFLOW_OUT overrides)");
  run->add_flag("--resume", resume, "Continue from the last snapshot of an existing run");

  auto* analyze = app.add_subcommand("analyze", "Singular time, tangent flow and densities");
  analyze->add_option("--out", out_flag, "Run directory (EQUIFLOW_OUT overrides)");
  analyze->add_option("--scales", scales_text, "Comma-separated rescaling factors");
  analyze->add_option("--radius", radius, "Ball radius R for the tangent-flow annulus");

  auto* verify = app.add_subcommand("verify", "Re-check the monitor suite on a finished run");
  verify->add_option("--out", out_flag, "Run directory (EQUIFLOW_OUT overrides)");
  verify->add_option("--monitors", monitors_text, "Comma-separated monitor names (default: all)");

  auto* sweep = app.add_subcommand("sweep", "Run several configs concurrently");
  sweep->add_option("--config", sweep_configs, "Config files")->required();
  sweep->add_option("--out", out_flag, "Parent directory (EQUIFLOW_OUT overrides)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const auto config = equiflow::parse_config(config_path);
      std::optional<fs::path> flag;
      if (!out_flag.empty()) flag = fs::path(out_flag);
      const fs::path out = equiflow::resolve_output_dir(flag, config);
      const auto m = equiflow::cmd_run(config, out, resume);
      std::cout << "status " << equiflow::to_string(m.status) << ", " << m.snapshots.size()
                << " snapshots in " << out.string() << '\n';
      return 0;
    }
    if (analyze->parsed()) {
      const auto res = equiflow::cmd_analyze(run_dir(out_flag), parse_scales(scales_text), radius);
      std::cout << "T = " << res.estimate.T << " in [" << res.estimate.lo << ", " << res.estimate.hi
                << "]\n";
      for (const auto& b : res.report.branches)
        std::cout << "branch direction " << std::arg(b.direction) << " angle " << b.mean_angle
                  << " std " << b.angle_std << '\n';
      if (!res.report.note.empty()) std::cout << "note: " << res.report.note << '\n';
      return 0;
    }
    if (verify->parsed()) {
      const auto rows =
          equiflow::cmd_verify(run_dir(out_flag), parse_names(monitors_text), std::cout);
      for (const auto& r : rows)
        if (!r.pass) return 1;
      return 0;
    }
    if (sweep->parsed()) {
      std::vector<fs::path> paths(sweep_configs.begin(), sweep_configs.end());
      const auto done = equiflow::cmd_sweep(paths, run_dir(out_flag));
      for (std::size_t k = 0; k < done.size(); ++k)
        std::cout << paths[k].string() << ": " << equiflow::to_string(done[k].status) << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

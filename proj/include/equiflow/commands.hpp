#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "equiflow/config.hpp"
#include "equiflow/flow.hpp"
#include "equiflow/singularity.hpp"

namespace equiflow {

inline constexpr const char* kToolVersion = "equiflow 1.0.0";

/// Run manifest, written as manifest.json in the output directory. Paths are
/// relative to that directory. Wall-clock timings go to the separate text
/// file named in `timings`, so the JSON stays reproducible.
struct RunManifest {
  std::string config_hash;
  std::string config_text;  // canonical config
  std::string tool_version = kToolVersion;
  RunStatus status = RunStatus::running;
  std::size_t steps = 0;
  std::vector<std::string> snapshots;
  std::string diagnostics = "diagnostics.csv";
  std::vector<std::string> reports;
  std::string timings = "timings.log";
};

std::string manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const std::string& text);
RunManifest read_manifest(const std::filesystem::path& dir);
void write_manifest(const std::filesystem::path& dir, const RunManifest& m);

/// Output directory: EQUIFLOW_OUT if set, else `flag` if given, else the config's.
std::filesystem::path resolve_output_dir(const std::optional<std::filesystem::path>& flag,
                                         const FlowConfig& config);

/// Executes the flow and writes snapshots, diagnostics and the manifest.
/// With `resume`, continues from the last snapshot of an existing run with the
/// same config hash.
RunManifest cmd_run(const FlowConfig& config, const std::filesystem::path& out, bool resume = false);

/// Loads the snapshots listed in a manifest, in order.
std::vector<CurveSnapshot> load_trajectory(const std::filesystem::path& dir, const RunManifest& m);

struct AnalyzeResult {
  SingularityReport report;
  TimeEstimate estimate;
  cplx location{};
  std::vector<std::string> files;
};

/// Singular-time estimate, rescaled sequence, tangent-flow report, density
/// series and plot scripts for a blow-up run.
AnalyzeResult cmd_analyze(const std::filesystem::path& dir, const std::vector<double>& scales,
                          double radius);

struct VerifyRow {
  std::string monitor;
  double worst = 0.0;
  double tolerance = 0.0;
  bool pass = true;
};

/// Monitor names accepted by cmd_verify.
const std::vector<std::string>& verify_monitor_names();

/// Recomputes the monitor suite from the snapshot files and checks them
/// against the diagnostics table. Returns the rows; `out` gets the table.
std::vector<VerifyRow> cmd_verify(const std::filesystem::path& dir,
                                  const std::vector<std::string>& monitors, std::ostream& out);

/// Runs independent configs concurrently, each in out/<config stem>.
std::vector<RunManifest> cmd_sweep(const std::vector<std::filesystem::path>& configs,
                                   const std::filesystem::path& out);

}  // namespace equiflow

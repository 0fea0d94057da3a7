#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "equiflow/flow.hpp"

namespace equiflow {

/// Parse failure with the offending location, formatted "source:line: message".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, std::size_t line, const std::string& message);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Reads `key = value` lines ('#' starts a comment). Unknown or repeated keys,
/// malformed values and violated invariants are rejected.
///
/// Keys and defaults:
///   beta = 2.356194490192345   mode = graph | radial      nodes = 512
///   cluster = 0                r_cut = 20                 half_width = 10
///   cfl_factor = 0.4           dt_min = 1e-12             dt_max = 1e-3
///   t_end = 1                  min_dist_tol = 0.01        max_curvature_cap = 1e4
///   regrid_ratio = 0 (off)     regrid_length_tol = 1e-6   snapshot_dt = 0.005
///   snapshot_shrink = 0.9      family = standard | circle(r0)
///   output_dir = equiflow_out  sector_eps = 0.2, 0.3      ray_fractions = 0.25, 0.5, 0.75
///   area_radii = 0.5, 1, 2, 4, 8                          kernel_T = auto | value
///   drdt_tol = 1e-8
FlowConfig parse_config_text(const std::string& text, const std::string& source = "<config>");
FlowConfig parse_config(const std::filesystem::path& path);

/// Canonical `key = value` listing of every field that affects the run
/// (everything except output_dir), in a fixed order.
std::string canonical_config(const FlowConfig& config);

/// SHA-256 hex digest of canonical_config().
std::string config_hash(const FlowConfig& config);

std::string sha256_hex(const std::string& data);

}  // namespace equiflow

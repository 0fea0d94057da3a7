#include "equiflow/config.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "equiflow/snapshot_io.hpp"

namespace equiflow {

ConfigError::ConfigError(const std::string& source, std::size_t line, const std::string& message)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + message), line_(line) {}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& text) {
  const std::string v = trim(text);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty())
    throw std::invalid_argument("malformed number '" + v + "'");
  if (!std::isfinite(out)) throw std::invalid_argument("non-finite number '" + v + "'");
  return out;
}

std::size_t parse_count(const std::string& text) {
  const std::string v = trim(text);
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty())
    throw std::invalid_argument("malformed integer '" + v + "'");
  return out;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(item));
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

InitialFamily parse_family(const std::string& text) {
  const std::string v = trim(text);
  InitialFamily fam;
  if (v == "standard") return fam;
  const std::string prefix = "circle(";
  if (v.rfind(prefix, 0) == 0 && v.back() == ')') {
    fam.kind = InitialFamily::Kind::circle;
    fam.circle_radius = parse_double(v.substr(prefix.size(), v.size() - prefix.size() - 1));
    return fam;
  }
  throw std::invalid_argument("family must be 'standard' or 'circle(r0)', got '" + v + "'");
}

using Setter = void (*)(FlowConfig&, const std::string&);

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table{
      {"beta", [](FlowConfig& c, const std::string& v) { c.beta = parse_double(v); }},
      {"mode",
       [](FlowConfig& c, const std::string& v) {
         const std::string m = trim(v);
         if (m == "graph") c.mode = IntegratorMode::graph;
         else if (m == "radial") c.mode = IntegratorMode::radial;
         else throw std::invalid_argument("mode must be 'graph' or 'radial', got '" + m + "'");
       }},
      {"nodes", [](FlowConfig& c, const std::string& v) { c.nodes = parse_count(v); }},
      {"cluster", [](FlowConfig& c, const std::string& v) { c.cluster = parse_double(v); }},
      {"r_cut", [](FlowConfig& c, const std::string& v) { c.r_cut = parse_double(v); }},
      {"half_width", [](FlowConfig& c, const std::string& v) { c.half_width = parse_double(v); }},
      {"cfl_factor", [](FlowConfig& c, const std::string& v) { c.cfl_factor = parse_double(v); }},
      {"dt_min", [](FlowConfig& c, const std::string& v) { c.dt_min = parse_double(v); }},
      {"dt_max", [](FlowConfig& c, const std::string& v) { c.dt_max = parse_double(v); }},
      {"t_end", [](FlowConfig& c, const std::string& v) { c.t_end = parse_double(v); }},
      {"min_dist_tol", [](FlowConfig& c, const std::string& v) { c.min_dist_tol = parse_double(v); }},
      {"max_curvature_cap",
       [](FlowConfig& c, const std::string& v) { c.max_curvature_cap = parse_double(v); }},
      {"regrid_ratio", [](FlowConfig& c, const std::string& v) { c.regrid_ratio = parse_double(v); }},
      {"regrid_length_tol",
       [](FlowConfig& c, const std::string& v) { c.regrid_length_tol = parse_double(v); }},
      {"snapshot_dt", [](FlowConfig& c, const std::string& v) { c.snapshot_dt = parse_double(v); }},
      {"snapshot_shrink",
       [](FlowConfig& c, const std::string& v) { c.snapshot_shrink = parse_double(v); }},
      {"family", [](FlowConfig& c, const std::string& v) { c.family = parse_family(v); }},
      {"output_dir", [](FlowConfig& c, const std::string& v) { c.output_dir = trim(v); }},
      {"sector_eps", [](FlowConfig& c, const std::string& v) { c.sector_eps = parse_list(v); }},
      {"ray_fractions", [](FlowConfig& c, const std::string& v) { c.ray_fractions = parse_list(v); }},
      {"area_radii", [](FlowConfig& c, const std::string& v) { c.area_radii = parse_list(v); }},
      {"kernel_T",
       [](FlowConfig& c, const std::string& v) {
         if (trim(v) == "auto") c.kernel_T.reset();
         else c.kernel_T = parse_double(v);
       }},
      {"drdt_tol", [](FlowConfig& c, const std::string& v) { c.drdt_tol = parse_double(v); }},
  };
  return table;
}

}  // namespace

FlowConfig parse_config_text(const std::string& text, const std::string& source) {
  FlowConfig config;
  std::map<std::string, std::size_t> seen;
  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(source, lineno, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(source, lineno, "unknown key '" + key + "'");
    if (seen.count(key))
      throw ConfigError(source, lineno,
                        "duplicate key '" + key + "' (first set on line " +
                            std::to_string(seen[key]) + ")");
    if (value.empty()) throw ConfigError(source, lineno, "missing value for '" + key + "'");
    try {
      it->second(config, value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(source, lineno, key + ": " + e.what());
    }
    seen[key] = lineno;
  }
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    // Messages lead with the field name; point at the line that set it.
    const std::string msg = e.what();
    const std::string field = msg.substr(0, msg.find_first_of(" :"));
    const auto it = seen.find(field);
    throw ConfigError(source, it == seen.end() ? 0 : it->second, msg);
  }
  return config;
}

FlowConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

std::string canonical_config(const FlowConfig& c) {
  auto list = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + format_double(v[k]);
    return s;
  };
  std::ostringstream o;
  o << "beta = " << format_double(c.beta) << '\n'
    << "mode = " << (c.mode == IntegratorMode::graph ? "graph" : "radial") << '\n'
    << "nodes = " << c.nodes << '\n'
    << "cluster = " << format_double(c.cluster) << '\n'
    << "r_cut = " << format_double(c.r_cut) << '\n'
    << "half_width = " << format_double(c.half_width) << '\n'
    << "cfl_factor = " << format_double(c.cfl_factor) << '\n'
    << "dt_min = " << format_double(c.dt_min) << '\n'
    << "dt_max = " << format_double(c.dt_max) << '\n'
    << "t_end = " << format_double(c.t_end) << '\n'
    << "min_dist_tol = " << format_double(c.min_dist_tol) << '\n'
    << "max_curvature_cap = " << format_double(c.max_curvature_cap) << '\n'
    << "regrid_ratio = " << format_double(c.regrid_ratio) << '\n'
    << "regrid_length_tol = " << format_double(c.regrid_length_tol) << '\n'
    << "snapshot_dt = " << format_double(c.snapshot_dt) << '\n'
    << "snapshot_shrink = " << format_double(c.snapshot_shrink) << '\n'
    << "family = "
    << (c.closed() ? "circle(" + format_double(c.family.circle_radius) + ")" : std::string("standard"))
    << '\n'
    << "sector_eps = " << list(c.sector_eps) << '\n'
    << "ray_fractions = " << list(c.ray_fractions) << '\n'
    << "area_radii = " << list(c.area_radii) << '\n'
    << "kernel_T = " << (c.kernel_T ? format_double(*c.kernel_T) : std::string("auto")) << '\n'
    << "drdt_tol = " << format_double(c.drdt_tol) << '\n';
  return o.str();
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out += hex[digest[k] >> 4];
    out += hex[digest[k] & 0xF];
  }
  return out;
}

std::string config_hash(const FlowConfig& config) { return sha256_hex(canonical_config(config)); }

}  // namespace equiflow

#include "equiflow/snapshot_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

namespace equiflow {

using nlohmann::json;

std::string snapshot_to_json(const CurveSnapshot& snap) {
  json j;
  j["version"] = 1;
  j["t"] = snap.t;
  j["mode"] = std::string(to_string(snap.mode));
  j["beta"] = snap.beta;
  j["rotation"] = snap.rotation;
  j["params"] = snap.params;
  std::vector<double> x(snap.size()), y(snap.size());
  for (std::size_t k = 0; k < snap.size(); ++k) {
    x[k] = snap.points[k].real();
    y[k] = snap.points[k].imag();
  }
  j["x"] = std::move(x);
  j["y"] = std::move(y);
  return j.dump();
}

CurveSnapshot snapshot_from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.at("version").get<int>() != 1) throw std::invalid_argument("snapshot: unsupported version");
  CurveSnapshot snap;
  snap.t = j.at("t").get<double>();
  snap.mode = curve_mode_from_string(j.at("mode").get<std::string>());
  snap.beta = j.at("beta").get<double>();
  snap.rotation = j.at("rotation").get<double>();
  snap.params = j.at("params").get<std::vector<double>>();
  const auto x = j.at("x").get<std::vector<double>>();
  const auto y = j.at("y").get<std::vector<double>>();
  if (x.size() != y.size() || x.size() != snap.params.size())
    throw std::invalid_argument("snapshot: coordinate arrays differ in length");
  snap.points.resize(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) snap.points[k] = {x[k], y[k]};
  snap.validate();
  return snap;
}

void write_snapshot(const std::filesystem::path& path, const CurveSnapshot& snap) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << snapshot_to_json(snap) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

CurveSnapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return snapshot_from_json(ss.str());
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace equiflow

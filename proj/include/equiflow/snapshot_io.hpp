#pragma once

#include <filesystem>
#include <string>

#include "equiflow/geometry.hpp"

namespace equiflow {

/// JSON interchange form {version, t, mode, beta, rotation, params, x, y}.
/// Doubles are written in shortest round-trip form, so parse followed by
/// serialize reproduces the input byte for byte.
std::string snapshot_to_json(const CurveSnapshot& snap);
CurveSnapshot snapshot_from_json(const std::string& text);

void write_snapshot(const std::filesystem::path& path, const CurveSnapshot& snap);
CurveSnapshot read_snapshot(const std::filesystem::path& path);

/// Shortest round-trip decimal form of a double ("nan"/"inf" for non-finite).
std::string format_double(double v);

}  // namespace equiflow

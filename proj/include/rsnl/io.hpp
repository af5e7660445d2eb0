#pragma once

#include "rsnl/model.hpp"
#include "rsnl/types.hpp"

#include <map>
#include <string>

namespace rsnl::io {

// key = value scenario file; '#' starts a comment, unknown keys are errors.
// Keys mirror ScenarioSpec: shape, levels, rows, cols, depth, b, sigma,
// comm_radius, rho, anchor_count, eta, anchor_noise, seed, tilt_range_deg,
// tilt_prior_noise, sensor_arm.
ScenarioSpec load_scenario(const std::string& path);
ScenarioSpec parse_scenario(const std::string& text);

// Plain-text realization dump, one sensor per line: robot side x y [z].
void save_realization(const std::string& path, const Realization& p);
Realization load_realization(const std::string& path);

// Minimal RFC-4180-style field quoting (only when needed).
std::string csv_field(const std::string& value);

}  // namespace rsnl::io

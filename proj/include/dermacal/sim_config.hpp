#pragma once

#include "dermacal/simulate.hpp"

#include <string>

namespace dermacal::sim_config {

inline constexpr int kConfigVersion = 1;

/// Flat key-value YAML document. Keys:
///   config_version                       1
///   cohort.subject_count / seed / angle_jitter_sd
///   cohort.base_mean                     [L, a, b]
///   cohort.base_cov                      9 numbers, row-major
///   cohort.regions                       [names], order matters
///   region.<name>.offset_mean            [L, a, b]
///   region.<name>.offset_sd              [L, a, b]
///   devices                              [names], order matters
///   device.<name>.reference              bool
///   device.<name>.angles                 int
///   device.<name>.gain                   9 numbers, row-major
///   device.<name>.bias / noise_sigma / capture_sigma   [r, g, b]
///   device.<name>.region_exposure        one factor per cohort region (optional)
///   device.<name>.quantize_bits          8, 10, 12 or 0
/// Missing keys take the built-in default; unknown keys are rejected.
SimulatorConfig parse(const std::string& yaml_text);
SimulatorConfig load(const std::string& path);
std::string dump(const SimulatorConfig& cfg);

} // namespace dermacal::sim_config

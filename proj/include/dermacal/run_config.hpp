#pragma once

#include "dermacal/pipeline.hpp"

#include <string>
#include <string_view>

namespace dermacal::run_config {

inline constexpr std::string_view kEnvVar = "DERMACAL_CONFIG";

/// YAML mapping with any of: input (path or list), reference_device, folds,
/// seed, threshold, analyses (list or comma-separated), out_dir, format,
/// icc_form. Values are applied on top of `base`; unknown keys are rejected.
RunConfig parse(const std::string& yaml_text, RunConfig base = {});
RunConfig load(const std::string& path, RunConfig base = {});

/// "all", "none" or a comma-separated list of analysis names.
std::set<Analysis> parse_analyses(std::string_view text);

stats::IccForm parse_icc_form(std::string_view text);

} // namespace dermacal::run_config

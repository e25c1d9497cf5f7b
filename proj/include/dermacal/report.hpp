#pragma once

#include "dermacal/pipeline.hpp"

#include <json.hpp>

#include <string>

namespace dermacal::report {

inline constexpr int kReportVersion = 1;

enum class Format { Json, Markdown };

/// Schema v1. Object keys are sorted, non-finite numbers become null and
/// disabled sections are {"status": "skipped"}.
nlohmann::json to_json(const ReliabilityReport& r);

nlohmann::json to_json(const RunConfig& cfg);
nlohmann::json to_json(const Ccm& m);

/// JSON is indented by two spaces and ends with a newline. Markdown numbers
/// are printed with "%.3f", i.e. the binary value rounded to nearest at three
/// decimals, and come from the same values as the JSON.
std::string emit(const ReliabilityReport& r, Format format);

/// Re-serializes a parsed report document exactly as emit() would.
std::string emit_json(const nlohmann::json& doc);

} // namespace dermacal::report

#pragma once

#include "dermacal/patch.hpp"
#include "dermacal/simulate.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace dermacal {

/// How r, g, b are written in a patch file. Detected once per file: any
/// token containing '.', 'e' or 'E' makes the whole file unit-interval.
enum class RgbEncoding { EightBit, Unit };

struct PatchTable {
    std::vector<PatchRecord> records;
    RgbEncoding encoding = RgbEncoding::EightBit;
};

namespace patch_csv {

inline constexpr std::string_view kHeader = "subject_id,device,region,angle,r,g,b";

/// Strict parse. Errors name the source, the 1-based file line (header is
/// line 1) and the column. Throws ValidationError.
PatchTable parse(std::string_view text, const std::string& source = "<input>");

/// Reads and parses a file; IoError if it cannot be read.
PatchTable ingest(const std::string& path);

/// Concatenates several files; duplicate keys across files are rejected and
/// the files must agree on the RGB encoding.
PatchTable ingest_all(const std::vector<std::string>& paths);

std::string format(const PatchTable& table);

/// subject_id,region,l,a,b
std::string format_truth(const std::vector<TruthEntry>& truth);

void write_file(const std::string& path, std::string_view content);

} // namespace patch_csv
} // namespace dermacal

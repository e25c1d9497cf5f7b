#include "dermacal/patch_csv.hpp"

#include "dermacal/error.hpp"
#include "dermacal/format.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

namespace dermacal::patch_csv {

namespace {

constexpr std::array<std::string_view, 7> kColumns{"subject_id", "device", "region", "angle",
                                                   "r",          "g",      "b"};

std::vector<std::string_view> split(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos) {
            return out;
        }
        start = comma + 1;
    }
}

struct Line {
    std::size_t number;
    std::string_view text;
};

std::vector<Line> lines(std::string_view text)
{
    std::vector<Line> out;
    std::size_t start = 0;
    std::size_t number = 1;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        auto line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        out.push_back({number++, line});
        start = end + 1;
    }
    // Trailing blank lines are tolerated, interior ones are not.
    while (!out.empty() && out.back().text.empty()) {
        out.pop_back();
    }
    return out;
}

[[noreturn]] void fail(const std::string& source, std::size_t row, std::string_view column,
                       const std::string& what)
{
    throw ValidationError(source + ": row " + std::to_string(row) + ", column " +
                          std::string(column) + ": " + what);
}

bool looks_decimal(std::string_view tok)
{
    return tok.find_first_of(".eE") != std::string_view::npos;
}

} // namespace

PatchTable parse(std::string_view text, const std::string& source)
{
    if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") {
        text.remove_prefix(3);
    }
    const auto all = lines(text);
    if (all.empty()) {
        throw ValidationError(source + ": row 1: empty file, expected header '" +
                              std::string(kHeader) + "'");
    }

    const auto header = split(all.front().text);
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c >= kColumns.size() || header[c] != kColumns[c]) {
            const bool known = std::find(kColumns.begin(), kColumns.end(), header[c]) != kColumns.end();
            fail(source, 1, header[c],
                 std::string(known ? "column out of order" : "unknown column") + ", expected '" +
                     std::string(kHeader) + "'");
        }
    }
    if (header.size() != kColumns.size()) {
        fail(source, 1, kColumns[header.size()], "missing column, expected '" +
                                                     std::string(kHeader) + "'");
    }

    std::vector<std::vector<std::string_view>> rows;
    bool decimal = false;
    for (std::size_t i = 1; i < all.size(); ++i) {
        auto fields = split(all[i].text);
        if (fields.size() != kColumns.size()) {
            const auto col = fields.size() < kColumns.size() ? kColumns[fields.size()]
                                                             : std::string_view("(extra)");
            fail(source, all[i].number, col,
                 "expected 7 fields, found " + std::to_string(fields.size()));
        }
        for (std::size_t c = 4; c < 7; ++c) {
            decimal = decimal || looks_decimal(fields[c]);
        }
        rows.push_back(std::move(fields));
    }

    PatchTable table;
    table.encoding = decimal ? RgbEncoding::Unit : RgbEncoding::EightBit;
    std::set<std::tuple<std::string, std::string, std::string, int>> seen;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& f = rows[i];
        const std::size_t row = all[i + 1].number;
        PatchRecord rec;
        for (std::size_t c = 0; c < 3; ++c) {
            if (f[c].empty()) {
                fail(source, row, kColumns[c], "empty value");
            }
        }
        rec.subject_id = f[0];
        rec.device = f[1];
        rec.region = f[2];

        auto [p, ec] = std::from_chars(f[3].data(), f[3].data() + f[3].size(), rec.angle);
        if (ec != std::errc() || p != f[3].data() + f[3].size() || f[3].empty()) {
            fail(source, row, "angle", "'" + std::string(f[3]) + "' is not an integer");
        }

        std::array<double, 3> rgb{};
        for (std::size_t c = 0; c < 3; ++c) {
            const auto tok = f[4 + c];
            const auto col = kColumns[4 + c];
            const char* end = tok.data() + tok.size();
            if (decimal) {
                double v = 0.0;
                auto [q, e] = std::from_chars(tok.data(), end, v);
                if (e != std::errc() || q != end || tok.empty() || !std::isfinite(v)) {
                    fail(source, row, col, "'" + std::string(tok) + "' is not a number");
                }
                if (v < 0.0 || v > 1.0) {
                    fail(source, row, col, std::string(tok) + " outside [0, 1]");
                }
                rgb[c] = v;
            } else {
                int v = 0;
                auto [q, e] = std::from_chars(tok.data(), end, v);
                if (e != std::errc() || q != end || tok.empty()) {
                    fail(source, row, col, "'" + std::string(tok) + "' is not an 8-bit integer");
                }
                if (v < 0 || v > 255) {
                    fail(source, row, col, std::string(tok) + " outside [0, 255]");
                }
                rgb[c] = static_cast<double>(v) / 255.0;
            }
        }
        rec.rgb = {rgb[0], rgb[1], rgb[2]};

        if (!seen.emplace(rec.subject_id, rec.device, rec.region, rec.angle).second) {
            fail(source, row, "subject_id",
                 "duplicate key (" + rec.subject_id + ", " + rec.device + ", " + rec.region +
                     ", " + std::to_string(rec.angle) + ")");
        }
        table.records.push_back(std::move(rec));
    }
    return table;
}

PatchTable ingest(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open input file '" + path + "'");
    }
    std::ostringstream text;
    text << in.rdbuf();
    if (in.bad()) {
        throw IoError("error reading input file '" + path + "'");
    }
    return parse(text.str(), path);
}

PatchTable ingest_all(const std::vector<std::string>& paths)
{
    if (paths.empty()) {
        throw ValidationError("no input files given");
    }
    PatchTable merged = ingest(paths.front());
    std::set<std::tuple<std::string, std::string, std::string, int>> seen;
    for (const auto& r : merged.records) {
        seen.emplace(r.subject_id, r.device, r.region, r.angle);
    }
    for (std::size_t i = 1; i < paths.size(); ++i) {
        PatchTable t = ingest(paths[i]);
        if (t.encoding != merged.encoding && !t.records.empty()) {
            throw ValidationError(paths[i] + ": RGB encoding differs from " + paths.front());
        }
        for (auto& r : t.records) {
            if (!seen.emplace(r.subject_id, r.device, r.region, r.angle).second) {
                throw ValidationError(paths[i] + ": duplicate key (" + r.subject_id + ", " +
                                      r.device + ", " + r.region + ", " +
                                      std::to_string(r.angle) + ") across input files");
            }
            merged.records.push_back(std::move(r));
        }
    }
    return merged;
}

std::string format(const PatchTable& table)
{
    std::string out(kHeader);
    out += '\n';
    auto channel = [&](double v) {
        if (table.encoding == RgbEncoding::EightBit) {
            return std::to_string(std::lround(v * 255.0));
        }
        return shortest(v);
    };
    for (const auto& r : table.records) {
        out += r.subject_id + ',' + r.device + ',' + r.region + ',' + std::to_string(r.angle) +
               ',' + channel(r.rgb.r) + ',' + channel(r.rgb.g) + ',' + channel(r.rgb.b) + '\n';
    }
    return out;
}

std::string format_truth(const std::vector<TruthEntry>& truth)
{
    std::string out = "subject_id,region,l,a,b\n";
    for (const auto& t : truth) {
        out += t.subject_id + ',' + t.region + ',' + shortest(t.lab.l) + ',' + shortest(t.lab.a) +
               ',' + shortest(t.lab.b) + '\n';
    }
    return out;
}

void write_file(const std::string& path, std::string_view content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
        throw IoError("error writing '" + path + "'");
    }
}

} // namespace dermacal::patch_csv

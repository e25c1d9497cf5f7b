#pragma once

#include "dermacal/colorspace.hpp"

#include <string>
#include <tuple>

namespace dermacal {

/// One measured skin patch: a per-region colour summary from one capture.
struct PatchRecord {
    std::string subject_id;
    std::string device;
    std::string region;
    int angle = 0;
    SrgbColor rgb;

    friend bool operator==(const PatchRecord&, const PatchRecord&) = default;
};

inline auto record_key(const PatchRecord& p)
{
    return std::tie(p.subject_id, p.device, p.region, p.angle);
}

} // namespace dermacal

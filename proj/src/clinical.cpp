#include "dermacal/clinical.hpp"

#include "dermacal/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace dermacal::clinical {

namespace {
constexpr double kDegPerRad = 180.0 / std::numbers::pi;
}

double melanin_index(const LabColor& lab)
{
    if (!(lab.l > 0.0)) {
        throw DomainError("melanin_index: L* = " + std::to_string(lab.l) + " must be > 0");
    }
    return 100.0 * std::log10(100.0 / lab.l);
}

double erythema_index(const LabColor& lab) { return lab.a - 0.5 * lab.l; }

double ita(const LabColor& lab)
{
    return std::atan2(lab.l - 50.0, std::max(lab.b, 0.0)) * kDegPerRad;
}

bool ita_degenerate(const LabColor& lab) { return std::abs(lab.b) < kItaDegenerateB; }

ClinicalIndices indices(const LabColor& lab)
{
    return {melanin_index(lab), erythema_index(lab), ita(lab), ita_degenerate(lab)};
}

ItaSensitivity ita_sensitivity(const LabColor& lab)
{
    const double dl = lab.l - 50.0;
    const double r2 = dl * dl + lab.b * lab.b;
    if (r2 == 0.0) {
        throw DomainError("ita_sensitivity: singular at L* = 50, b* = 0");
    }
    ItaSensitivity s;
    s.d_ita_d_l_rad = lab.b / r2;
    s.d_ita_d_b_rad = -dl / r2;
    s.d_ita_d_l = s.d_ita_d_l_rad * kDegPerRad;
    s.d_ita_d_b = s.d_ita_d_b_rad * kDegPerRad;
    return s;
}

} // namespace dermacal::clinical

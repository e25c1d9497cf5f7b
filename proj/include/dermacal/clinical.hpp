#pragma once

#include "dermacal/colorspace.hpp"

namespace dermacal {

struct ClinicalIndices {
    double melanin_index = 0.0;
    double erythema_index = 0.0;
    double ita_degrees = 0.0;
    bool ita_degenerate = false; // |b*| below kItaDegenerateB
};

/// First-order ITA sensitivity at one Lab point. Partials are stored in both
/// radians and degrees per Lab unit.
struct ItaSensitivity {
    double d_ita_d_l_rad = 0.0;
    double d_ita_d_b_rad = 0.0;
    double d_ita_d_l = 0.0; // degrees per L* unit
    double d_ita_d_b = 0.0; // degrees per b* unit

    /// Linear propagation of (dL*, db*) errors into ITA, in degrees.
    double predicted_ita_error(double delta_l, double delta_b) const
    {
        return d_ita_d_l * delta_l + d_ita_d_b * delta_b;
    }
};

namespace clinical {

inline constexpr double kItaDegenerateB = 0.5;

/// 100 * log10(100 / L*). Throws DomainError for L* <= 0.
double melanin_index(const LabColor& lab);

/// a* - 0.5 * L*.
double erythema_index(const LabColor& lab);

/// Individual typology angle in degrees, atan2(L* - 50, max(b*, 0)).
/// Equals arctan((L* - 50) / b*) for b* > 0, saturates at +/-90 for b* <= 0,
/// and is 0 at (L*, b*) = (50, 0).
double ita(const LabColor& lab);

bool ita_degenerate(const LabColor& lab);

ClinicalIndices indices(const LabColor& lab);

/// Throws DomainError at the singular point (L*, b*) = (50, 0).
ItaSensitivity ita_sensitivity(const LabColor& lab);

} // namespace clinical
} // namespace dermacal

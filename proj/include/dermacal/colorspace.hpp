#pragma once

#include <array>

namespace dermacal {

/// Display-referred sRGB, each component in [0, 1].
struct SrgbColor {
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;
    friend bool operator==(const SrgbColor&, const SrgbColor&) = default;
};

/// Linear-light RGB (sRGB primaries). Values above 1 are allowed before clipping.
struct LinearRgb {
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;
    friend bool operator==(const LinearRgb&, const LinearRgb&) = default;
};

/// CIE 1931 tristimulus values relative to D65, Y = 1 for the white point.
struct XyzColor {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

/// CIELAB (D65, 2 degree observer).
struct LabColor {
    double l = 0.0;
    double a = 0.0;
    double b = 0.0;
    friend bool operator==(const LabColor&, const LabColor&) = default;
};

namespace colorspace {

// sRGB (D65) primaries to XYZ. Row sums reproduce kD65White.
inline constexpr std::array<std::array<double, 3>, 3> kRgbToXyz{{
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
}};

inline constexpr XyzColor kD65White{0.95047, 1.00000, 1.08883};

// Piecewise sRGB transfer function constants.
inline constexpr double kDecodeThreshold = 0.04045;
inline constexpr double kEncodeThreshold = 0.0031308;
inline constexpr double kLinearSlope = 12.92;

// CIE L* cube-root threshold is (6/29)^3.
inline constexpr double kLabDelta = 6.0 / 29.0;

SrgbColor srgb_from_8bit(int r, int g, int b);

/// Piecewise sRGB EOCF. Throws DomainError naming the channel if a component
/// lies outside [0, 1] or is not finite.
LinearRgb srgb_decode(const SrgbColor& c);

/// Inverse of srgb_decode. Components above 1 are clipped to 1; negative or
/// non-finite components throw DomainError.
SrgbColor srgb_encode(const LinearRgb& c);

XyzColor linear_to_xyz(const LinearRgb& c);
LinearRgb xyz_to_linear(const XyzColor& c);

XyzColor lab_to_xyz(const LabColor& c);
LabColor xyz_to_lab(const XyzColor& c);

LabColor linear_to_lab(const LinearRgb& c);
LinearRgb lab_to_linear(const LabColor& c);

LabColor srgb_to_lab(const SrgbColor& c);

/// CIEDE2000 colour difference with kL = kC = kH = 1.
double ciede2000(const LabColor& x, const LabColor& y);

} // namespace colorspace
} // namespace dermacal

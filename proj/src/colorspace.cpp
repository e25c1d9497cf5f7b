#include "dermacal/colorspace.hpp"

#include "dermacal/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace dermacal::colorspace {

namespace {

void require_finite(double v, const char* what, const char* channel)
{
    if (!std::isfinite(v)) {
        throw DomainError(std::string(what) + ": channel " + channel + " is not finite");
    }
}

double decode_component(double v, const char* channel)
{
    require_finite(v, "srgb_decode", channel);
    if (v < 0.0 || v > 1.0) {
        throw DomainError("srgb_decode: channel " + std::string(channel) + " = " +
                          std::to_string(v) + " outside [0, 1]");
    }
    if (v <= kDecodeThreshold) {
        return v / kLinearSlope;
    }
    return std::pow((v + 0.055) / 1.055, 2.4);
}

double encode_component(double v, const char* channel)
{
    require_finite(v, "srgb_encode", channel);
    if (v < 0.0) {
        throw DomainError("srgb_encode: channel " + std::string(channel) + " = " +
                          std::to_string(v) + " is negative");
    }
    v = std::min(v, 1.0);
    if (v <= kEncodeThreshold) {
        return kLinearSlope * v;
    }
    return 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

double lab_f(double t)
{
    constexpr double d3 = kLabDelta * kLabDelta * kLabDelta;
    if (t > d3) {
        return std::cbrt(t);
    }
    return t / (3.0 * kLabDelta * kLabDelta) + 4.0 / 29.0;
}

double lab_f_inv(double t)
{
    if (t > kLabDelta) {
        return t * t * t;
    }
    return 3.0 * kLabDelta * kLabDelta * (t - 4.0 / 29.0);
}

// Inverse of kRgbToXyz, computed once by cofactor expansion.
struct Inverse3 {
    std::array<std::array<double, 3>, 3> m{};
    Inverse3()
    {
        const auto& a = kRgbToXyz;
        const double c00 = a[1][1] * a[2][2] - a[1][2] * a[2][1];
        const double c01 = a[1][2] * a[2][0] - a[1][0] * a[2][2];
        const double c02 = a[1][0] * a[2][1] - a[1][1] * a[2][0];
        const double det = a[0][0] * c00 + a[0][1] * c01 + a[0][2] * c02;
        m[0][0] = c00 / det;
        m[1][0] = c01 / det;
        m[2][0] = c02 / det;
        m[0][1] = (a[0][2] * a[2][1] - a[0][1] * a[2][2]) / det;
        m[1][1] = (a[0][0] * a[2][2] - a[0][2] * a[2][0]) / det;
        m[2][1] = (a[0][1] * a[2][0] - a[0][0] * a[2][1]) / det;
        m[0][2] = (a[0][1] * a[1][2] - a[0][2] * a[1][1]) / det;
        m[1][2] = (a[0][2] * a[1][0] - a[0][0] * a[1][2]) / det;
        m[2][2] = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) / det;
    }
};

const Inverse3& xyz_to_rgb()
{
    static const Inverse3 inv;
    return inv;
}

constexpr double deg(double rad) { return rad * 180.0 / std::numbers::pi; }
constexpr double rad(double deg) { return deg * std::numbers::pi / 180.0; }

} // namespace

SrgbColor srgb_from_8bit(int r, int g, int b)
{
    auto check = [](int v, const char* channel) {
        if (v < 0 || v > 255) {
            throw DomainError("8-bit channel " + std::string(channel) + " = " +
                              std::to_string(v) + " outside [0, 255]");
        }
        return static_cast<double>(v) / 255.0;
    };
    return {check(r, "r"), check(g, "g"), check(b, "b")};
}

LinearRgb srgb_decode(const SrgbColor& c)
{
    return {decode_component(c.r, "r"), decode_component(c.g, "g"),
            decode_component(c.b, "b")};
}

SrgbColor srgb_encode(const LinearRgb& c)
{
    return {encode_component(c.r, "r"), encode_component(c.g, "g"),
            encode_component(c.b, "b")};
}

XyzColor linear_to_xyz(const LinearRgb& c)
{
    require_finite(c.r, "linear_to_xyz", "r");
    require_finite(c.g, "linear_to_xyz", "g");
    require_finite(c.b, "linear_to_xyz", "b");
    const auto& m = kRgbToXyz;
    return {m[0][0] * c.r + m[0][1] * c.g + m[0][2] * c.b,
            m[1][0] * c.r + m[1][1] * c.g + m[1][2] * c.b,
            m[2][0] * c.r + m[2][1] * c.g + m[2][2] * c.b};
}

LinearRgb xyz_to_linear(const XyzColor& c)
{
    require_finite(c.x, "xyz_to_linear", "x");
    require_finite(c.y, "xyz_to_linear", "y");
    require_finite(c.z, "xyz_to_linear", "z");
    const auto& m = xyz_to_rgb().m;
    return {m[0][0] * c.x + m[0][1] * c.y + m[0][2] * c.z,
            m[1][0] * c.x + m[1][1] * c.y + m[1][2] * c.z,
            m[2][0] * c.x + m[2][1] * c.y + m[2][2] * c.z};
}

LabColor xyz_to_lab(const XyzColor& c)
{
    require_finite(c.x, "xyz_to_lab", "x");
    require_finite(c.y, "xyz_to_lab", "y");
    require_finite(c.z, "xyz_to_lab", "z");
    const double fx = lab_f(c.x / kD65White.x);
    const double fy = lab_f(c.y / kD65White.y);
    const double fz = lab_f(c.z / kD65White.z);
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

XyzColor lab_to_xyz(const LabColor& c)
{
    require_finite(c.l, "lab_to_xyz", "l");
    require_finite(c.a, "lab_to_xyz", "a");
    require_finite(c.b, "lab_to_xyz", "b");
    const double fy = (c.l + 16.0) / 116.0;
    const double fx = fy + c.a / 500.0;
    const double fz = fy - c.b / 200.0;
    return {kD65White.x * lab_f_inv(fx), kD65White.y * lab_f_inv(fy),
            kD65White.z * lab_f_inv(fz)};
}

LabColor linear_to_lab(const LinearRgb& c) { return xyz_to_lab(linear_to_xyz(c)); }

LinearRgb lab_to_linear(const LabColor& c) { return xyz_to_linear(lab_to_xyz(c)); }

LabColor srgb_to_lab(const SrgbColor& c) { return linear_to_lab(srgb_decode(c)); }

double ciede2000(const LabColor& x, const LabColor& y)
{
    require_finite(x.l, "ciede2000", "l");
    require_finite(x.a, "ciede2000", "a");
    require_finite(x.b, "ciede2000", "b");
    require_finite(y.l, "ciede2000", "l");
    require_finite(y.a, "ciede2000", "a");
    require_finite(y.b, "ciede2000", "b");

    constexpr double k25pow7 = 6103515625.0; // 25^7

    const double c1 = std::hypot(x.a, x.b);
    const double c2 = std::hypot(y.a, y.b);
    const double c_bar7 = std::pow((c1 + c2) / 2.0, 7.0);
    const double g = 0.5 * (1.0 - std::sqrt(c_bar7 / (c_bar7 + k25pow7)));

    const double a1p = (1.0 + g) * x.a;
    const double a2p = (1.0 + g) * y.a;
    const double c1p = std::hypot(a1p, x.b);
    const double c2p = std::hypot(a2p, y.b);

    auto hue = [](double b, double ap) {
        if (b == 0.0 && ap == 0.0) {
            return 0.0;
        }
        double h = deg(std::atan2(b, ap));
        return h < 0.0 ? h + 360.0 : h;
    };
    const double h1p = hue(x.b, a1p);
    const double h2p = hue(y.b, a2p);

    const double dl = y.l - x.l;
    const double dc = c2p - c1p;
    const double cprod = c1p * c2p;

    double dh = 0.0;
    if (cprod != 0.0) {
        dh = h2p - h1p;
        if (dh > 180.0) {
            dh -= 360.0;
        } else if (dh < -180.0) {
            dh += 360.0;
        }
    }
    const double dH = 2.0 * std::sqrt(cprod) * std::sin(rad(dh / 2.0));

    const double l_bar = (x.l + y.l) / 2.0;
    const double cp_bar = (c1p + c2p) / 2.0;

    double h_bar = h1p + h2p;
    if (cprod != 0.0) {
        if (std::abs(h1p - h2p) <= 180.0) {
            h_bar /= 2.0;
        } else if (h1p + h2p < 360.0) {
            h_bar = (h_bar + 360.0) / 2.0;
        } else {
            h_bar = (h_bar - 360.0) / 2.0;
        }
    }

    const double t = 1.0 - 0.17 * std::cos(rad(h_bar - 30.0)) +
                     0.24 * std::cos(rad(2.0 * h_bar)) +
                     0.32 * std::cos(rad(3.0 * h_bar + 6.0)) -
                     0.20 * std::cos(rad(4.0 * h_bar - 63.0));
    const double d_theta = 30.0 * std::exp(-std::pow((h_bar - 275.0) / 25.0, 2.0));
    const double cp_bar7 = std::pow(cp_bar, 7.0);
    const double r_c = 2.0 * std::sqrt(cp_bar7 / (cp_bar7 + k25pow7));
    const double l50 = (l_bar - 50.0) * (l_bar - 50.0);
    const double s_l = 1.0 + 0.015 * l50 / std::sqrt(20.0 + l50);
    const double s_c = 1.0 + 0.045 * cp_bar;
    const double s_h = 1.0 + 0.015 * cp_bar * t;
    const double r_t = -std::sin(rad(2.0 * d_theta)) * r_c;

    const double tl = dl / s_l;
    const double tc = dc / s_c;
    const double th = dH / s_h;
    const double sum = tl * tl + tc * tc + th * th + r_t * tc * th;
    return std::sqrt(std::max(sum, 0.0));
}

} // namespace dermacal::colorspace

#pragma once

#include "dermacal/colorspace.hpp"
#include "dermacal/patch.hpp"
#include "dermacal/rng.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace dermacal {

/// Blue-channel noise relative to green: shot noise ~ 1/sqrt(QE) with blue QE
/// about 30% of green.
inline constexpr double kBlueNoiseFactor = 1.8;

inline std::array<double, 3> blue_scaled(double green_sigma, double factor = kBlueNoiseFactor)
{
    return {green_sigma, green_sigma, factor * green_sigma};
}

/// Rendering model of one capture device, acting on linear RGB:
///   out = capture_gain .* (exposure[region] * gain * rgb + bias) + noise
/// followed by clipping, sRGB encoding and quantization.
struct DeviceModel {
    std::string name;
    bool reference = false;
    Eigen::Matrix3d gain = Eigen::Matrix3d::Identity();
    Eigen::Vector3d bias = Eigen::Vector3d::Zero();
    std::array<double, 3> noise_sigma{0.0, 0.0, 0.0};   // per record, additive
    std::array<double, 3> capture_sigma{0.0, 0.0, 0.0}; // per subject session, multiplicative
    std::map<std::string, double> region_exposure;       // absent regions use 1
    int quantize_bits = 8;                               // 8, 10, 12 or 0 (off)

    double exposure(const std::string& region) const;
    void validate() const;
};

struct RegionSpec {
    std::string name;
    LabColor offset_mean;
    std::array<double, 3> offset_sd{0.0, 0.0, 0.0};
};

struct CohortConfig {
    int subject_count = 200;
    std::vector<RegionSpec> regions;
    std::map<std::string, int> angles_per_device;
    LabColor base_mean{81.35, 7.95, 17.59};
    Eigen::Matrix3d base_cov = Eigen::Matrix3d::Zero();
    double angle_jitter_sd = 0.5; // L* units, per record
    std::uint64_t seed = 42;

    void validate() const;
};

struct SimulatorConfig {
    CohortConfig cohort;
    std::vector<DeviceModel> devices;
};

struct TruthEntry {
    std::string subject_id;
    std::string region;
    LabColor lab;
};

struct SyntheticCohort {
    std::vector<PatchRecord> records;
    std::vector<TruthEntry> truth; // one per (subject, region)
    int quantize_bits = 8;         // common bit depth, 0 when devices differ or are off
};

/// Per-record conditions that are fixed outside the device model.
struct RenderConditions {
    double exposure = 1.0;
    std::array<double, 3> capture_gain{1.0, 1.0, 1.0};
};

namespace simulate {

std::string subject_id(int index, int subject_count);

/// Ground-truth Lab per (subject, region), subject-major in config order.
/// Each subject draws from its own stream derived from cfg.seed.
std::vector<TruthEntry> sample_true_skin(const CohortConfig& cfg);

SrgbColor render_device(const DeviceModel& model, const LabColor& truth, Rng& rng,
                        const RenderConditions& conditions = {});

SyntheticCohort generate_cohort(const CohortConfig& cfg, const std::vector<DeviceModel>& models);

/// Bias that maps reference_mean onto device_mean for a given gain:
/// lin(device_mean) - gain * lin(reference_mean).
Eigen::Vector3d tune_bias(const Eigen::Matrix3d& gain, const LabColor& reference_mean,
                          const LabColor& device_mean);

/// Built-in default cohort and devices (frozen constants).
SimulatorConfig default_config();

} // namespace simulate
} // namespace dermacal

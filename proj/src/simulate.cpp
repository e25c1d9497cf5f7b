#include "dermacal/simulate.hpp"

#include "dermacal/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <set>

namespace dermacal {

double DeviceModel::exposure(const std::string& region) const
{
    auto it = region_exposure.find(region);
    return it == region_exposure.end() ? 1.0 : it->second;
}

void DeviceModel::validate() const
{
    if (name.empty()) {
        throw ValidationError("device model without a name");
    }
    if (!gain.allFinite() || !bias.allFinite()) {
        throw ValidationError("device '" + name + "': gain and bias must be finite");
    }
    for (int c = 0; c < 3; ++c) {
        if (!(noise_sigma[c] >= 0.0) || !(capture_sigma[c] >= 0.0)) {
            throw ValidationError("device '" + name + "': noise sigmas must be >= 0");
        }
    }
    for (const auto& [region, e] : region_exposure) {
        if (!(e > 0.0) || !std::isfinite(e)) {
            throw ValidationError("device '" + name + "': exposure for region '" + region +
                                  "' must be positive");
        }
    }
    if (quantize_bits != 0 && quantize_bits != 8 && quantize_bits != 10 && quantize_bits != 12) {
        throw ValidationError("device '" + name + "': quantize_bits must be 0, 8, 10 or 12");
    }
}

void CohortConfig::validate() const
{
    if (subject_count < 1) {
        throw ValidationError("cohort: subject_count must be >= 1");
    }
    if (regions.empty()) {
        throw ValidationError("cohort: at least one region is required");
    }
    std::set<std::string> names;
    for (const auto& r : regions) {
        if (r.name.empty() || !names.insert(r.name).second) {
            throw ValidationError("cohort: region names must be non-empty and unique");
        }
        for (double sd : r.offset_sd) {
            if (!(sd >= 0.0)) {
                throw ValidationError("cohort: region '" + r.name + "' offset SD must be >= 0");
            }
        }
    }
    for (const auto& [device, n] : angles_per_device) {
        if (n < 1) {
            throw ValidationError("cohort: device '" + device + "' needs at least one angle");
        }
    }
    if (!(angle_jitter_sd >= 0.0)) {
        throw ValidationError("cohort: angle_jitter_sd must be >= 0");
    }
    if (!base_cov.allFinite() || !base_cov.isApprox(base_cov.transpose(), 1e-12)) {
        throw ValidationError("cohort: base covariance must be finite and symmetric");
    }
    const Eigen::Vector3d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(
                                   base_cov, Eigen::EigenvaluesOnly)
                                   .eigenvalues();
    const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    if (ev.minCoeff() < -1e-12 * scale) {
        throw ValidationError("cohort: base covariance is not positive semidefinite");
    }
}

namespace simulate {

namespace {

enum Stream : std::uint64_t { kTruthStream = 0, kDeviceStreamBase = 1 };

// Factor f with f * f^T = cov, valid for semidefinite matrices.
Eigen::Matrix3d covariance_factor(const Eigen::Matrix3d& cov)
{
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
    const Eigen::Vector3d root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * root.asDiagonal();
}

double quantize(double v, int bits)
{
    if (bits == 0) {
        return v;
    }
    const double levels = std::ldexp(1.0, bits) - 1.0;
    return std::round(v * levels) / levels;
}

int common_bits(const std::vector<DeviceModel>& models)
{
    const int bits = models.front().quantize_bits;
    for (const auto& m : models) {
        if (m.quantize_bits != bits) {
            return 0;
        }
    }
    return bits;
}

} // namespace

std::string subject_id(int index, int subject_count)
{
    const auto width = std::max<std::size_t>(4, std::to_string(subject_count).size());
    std::string digits = std::to_string(index + 1);
    return "S" + std::string(width - std::min(width, digits.size()), '0') + digits;
}

std::vector<TruthEntry> sample_true_skin(const CohortConfig& cfg)
{
    cfg.validate();
    const Eigen::Matrix3d factor = covariance_factor(cfg.base_cov);
    const Eigen::Vector3d mean(cfg.base_mean.l, cfg.base_mean.a, cfg.base_mean.b);

    std::vector<TruthEntry> truth;
    truth.reserve(static_cast<std::size_t>(cfg.subject_count) * cfg.regions.size());
    for (int s = 0; s < cfg.subject_count; ++s) {
        Rng rng = Rng::derive(cfg.seed, kTruthStream, static_cast<std::uint64_t>(s));
        Eigen::Vector3d z;
        for (int c = 0; c < 3; ++c) {
            z(c) = rng.normal();
        }
        const Eigen::Vector3d base = mean + factor * z;
        const std::string id = subject_id(s, cfg.subject_count);
        for (const auto& region : cfg.regions) {
            const double zl = rng.normal();
            const double za = rng.normal();
            const double zb = rng.normal();
            truth.push_back({id, region.name,
                             {base(0) + region.offset_mean.l + region.offset_sd[0] * zl,
                              base(1) + region.offset_mean.a + region.offset_sd[1] * za,
                              base(2) + region.offset_mean.b + region.offset_sd[2] * zb}});
        }
    }
    return truth;
}

SrgbColor render_device(const DeviceModel& model, const LabColor& truth, Rng& rng,
                        const RenderConditions& conditions)
{
    const LinearRgb lin = colorspace::lab_to_linear(truth);
    const Eigen::Vector3d in(std::max(lin.r, 0.0), std::max(lin.g, 0.0), std::max(lin.b, 0.0));
    Eigen::Vector3d out = conditions.exposure * (model.gain * in) + model.bias;
    for (int c = 0; c < 3; ++c) {
        out(c) *= conditions.capture_gain[static_cast<std::size_t>(c)];
        out(c) += model.noise_sigma[static_cast<std::size_t>(c)] * rng.normal();
        out(c) = std::clamp(out(c), 0.0, 1.0);
    }
    const SrgbColor enc = colorspace::srgb_encode({out(0), out(1), out(2)});
    return {quantize(enc.r, model.quantize_bits), quantize(enc.g, model.quantize_bits),
            quantize(enc.b, model.quantize_bits)};
}

SyntheticCohort generate_cohort(const CohortConfig& cfg, const std::vector<DeviceModel>& models)
{
    cfg.validate();
    if (models.size() < 2) {
        throw ValidationError("generate_cohort: need at least 2 device models");
    }
    std::set<std::string> names;
    int references = 0;
    for (const auto& m : models) {
        m.validate();
        if (!names.insert(m.name).second) {
            throw ValidationError("generate_cohort: duplicate device '" + m.name + "'");
        }
        if (!cfg.angles_per_device.contains(m.name)) {
            throw ValidationError("generate_cohort: no angle count for device '" + m.name + "'");
        }
        references += m.reference ? 1 : 0;
    }
    if (references != 1) {
        throw ValidationError("generate_cohort: exactly one device must be flagged reference, got " +
                              std::to_string(references));
    }

    SyntheticCohort cohort;
    cohort.truth = sample_true_skin(cfg);
    cohort.quantize_bits = common_bits(models);

    std::size_t total = 0;
    for (const auto& m : models) {
        total += cfg.regions.size() * static_cast<std::size_t>(cfg.angles_per_device.at(m.name));
    }
    cohort.records.reserve(total * static_cast<std::size_t>(cfg.subject_count));

    const std::size_t n_regions = cfg.regions.size();
    for (int s = 0; s < cfg.subject_count; ++s) {
        for (std::size_t d = 0; d < models.size(); ++d) {
            const auto& model = models[d];
            Rng rng = Rng::derive(cfg.seed, kDeviceStreamBase + d, static_cast<std::uint64_t>(s));
            RenderConditions cond;
            for (std::size_t c = 0; c < 3; ++c) {
                cond.capture_gain[c] = 1.0 + model.capture_sigma[c] * rng.normal();
            }
            const int angles = cfg.angles_per_device.at(model.name);
            for (std::size_t r = 0; r < n_regions; ++r) {
                const auto& entry = cohort.truth[static_cast<std::size_t>(s) * n_regions + r];
                cond.exposure = model.exposure(entry.region);
                for (int a = 0; a < angles; ++a) {
                    LabColor lab = entry.lab;
                    lab.l += cfg.angle_jitter_sd * rng.normal();
                    cohort.records.push_back(
                        {entry.subject_id, model.name, entry.region, a,
                         render_device(model, lab, rng, cond)});
                }
            }
        }
    }
    return cohort;
}

Eigen::Vector3d tune_bias(const Eigen::Matrix3d& gain, const LabColor& reference_mean,
                          const LabColor& device_mean)
{
    const LinearRgb ref = colorspace::lab_to_linear(reference_mean);
    const LinearRgb dev = colorspace::lab_to_linear(device_mean);
    return Eigen::Vector3d(dev.r, dev.g, dev.b) - gain * Eigen::Vector3d(ref.r, ref.g, ref.b);
}

SimulatorConfig default_config()
{
    SimulatorConfig cfg;
    auto& cohort = cfg.cohort;
    cohort.subject_count = 200;
    cohort.seed = 42;
    cohort.base_mean = {81.35, 7.95, 17.59};
    // SD (2.3, 1.2, 1.4), corr(L*, b*) = 0.25.
    cohort.base_cov << 5.29, 0.0, 0.805,
                       0.0, 1.44, 0.0,
                       0.805, 0.0, 1.96;
    cohort.angle_jitter_sd = 0.5;
    const std::array<double, 3> region_sd{0.8, 0.6, 0.6};
    cohort.regions = {
        {"forehead", {0.75, -0.30, 0.42}, region_sd},
        {"left_cheek", {0.15, 0.15, 0.09}, region_sd},
        {"right_cheek", {0.15, 0.15, 0.09}, region_sd},
        {"chin", {-1.20, 0.45, -0.66}, region_sd},
        {"glabella", {0.45, -0.30, 0.24}, region_sd},
    };
    cohort.angles_per_device = {{"dslr", 7}, {"tablet", 3}, {"smartphone", 3}};

    const std::map<std::string, double> consumer_exposure{
        {"forehead", 1.0575}, {"left_cheek", 1.0115}, {"right_cheek", 1.0115},
        {"chin", 0.885},      {"glabella", 1.0345},
    };

    DeviceModel dslr;
    dslr.name = "dslr";
    dslr.reference = true;
    dslr.noise_sigma = blue_scaled(0.003);

    DeviceModel tablet;
    tablet.name = "tablet";
    tablet.gain = 0.8 * Eigen::Matrix3d::Identity();
    tablet.bias << -0.070313, -0.017763, 0.032591;
    tablet.noise_sigma = blue_scaled(0.003);
    tablet.capture_sigma = blue_scaled(0.040);
    tablet.region_exposure = consumer_exposure;

    DeviceModel phone;
    phone.name = "smartphone";
    phone.gain = 0.8 * Eigen::Matrix3d::Identity();
    phone.bias << 0.009062, 0.058657, 0.110238;
    phone.noise_sigma = blue_scaled(0.003);
    phone.capture_sigma = blue_scaled(0.043);
    phone.region_exposure = consumer_exposure;

    cfg.devices = {dslr, tablet, phone};
    return cfg;
}

} // namespace simulate
} // namespace dermacal

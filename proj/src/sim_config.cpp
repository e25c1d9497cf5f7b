#include "dermacal/sim_config.hpp"

#include "dermacal/error.hpp"
#include "dermacal/format.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace dermacal::sim_config {

namespace {

std::vector<double> numbers(const YAML::Node& node, const std::string& key, std::size_t n)
{
    if (!node.IsSequence() || node.size() != n) {
        throw ValidationError("config key '" + key + "': expected a list of " +
                              std::to_string(n) + " numbers");
    }
    std::vector<double> out;
    for (const auto& item : node) {
        try {
            out.push_back(item.as<double>());
        } catch (const YAML::Exception&) {
            throw ValidationError("config key '" + key + "': '" + item.Scalar() +
                                  "' is not a number");
        }
    }
    return out;
}

std::vector<std::string> names(const YAML::Node& node, const std::string& key)
{
    if (!node.IsSequence()) {
        throw ValidationError("config key '" + key + "': expected a list of names");
    }
    std::vector<std::string> out;
    for (const auto& item : node) {
        out.push_back(item.as<std::string>());
    }
    return out;
}

template <class T>
T scalar(const YAML::Node& node, const std::string& key)
{
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        throw ValidationError("config key '" + key + "': invalid value '" + node.Scalar() + "'");
    }
}

LabColor lab(const std::vector<double>& v) { return {v[0], v[1], v[2]}; }
std::array<double, 3> arr3(const std::vector<double>& v) { return {v[0], v[1], v[2]}; }

std::string list(std::initializer_list<double> v)
{
    std::string s = "[";
    for (auto it = v.begin(); it != v.end(); ++it) {
        s += (it == v.begin() ? "" : ", ") + shortest(*it);
    }
    return s + "]";
}

std::string list(const std::array<double, 3>& v) { return list({v[0], v[1], v[2]}); }

std::string matrix(const Eigen::Matrix3d& m)
{
    return list({m(0, 0), m(0, 1), m(0, 2), m(1, 0), m(1, 1), m(1, 2), m(2, 0), m(2, 1), m(2, 2)});
}

Eigen::Matrix3d to_matrix(const std::vector<double>& v)
{
    Eigen::Matrix3d m;
    m << v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8];
    return m;
}

} // namespace

SimulatorConfig parse(const std::string& yaml_text)
{
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        throw ValidationError(std::string("config: YAML syntax error: ") + e.what());
    }
    if (!root.IsMap()) {
        throw ValidationError("config: top level must be a key-value mapping");
    }
    if (!root["config_version"]) {
        throw ValidationError("config: missing config_version");
    }
    if (scalar<int>(root["config_version"], "config_version") != kConfigVersion) {
        throw ValidationError("config: unsupported config_version '" +
                              root["config_version"].Scalar() + "'");
    }

    const SimulatorConfig defaults = simulate::default_config();
    SimulatorConfig cfg = defaults;
    auto& cohort = cfg.cohort;

    if (root["cohort.regions"]) {
        cohort.regions.clear();
        for (const auto& n : names(root["cohort.regions"], "cohort.regions")) {
            auto it = std::find_if(defaults.cohort.regions.begin(), defaults.cohort.regions.end(),
                                   [&](const RegionSpec& r) { return r.name == n; });
            cohort.regions.push_back(it != defaults.cohort.regions.end() ? *it : RegionSpec{n, {}, {}});
        }
    }
    if (root["devices"]) {
        cfg.devices.clear();
        cohort.angles_per_device.clear();
        for (const auto& n : names(root["devices"], "devices")) {
            auto it = std::find_if(defaults.devices.begin(), defaults.devices.end(),
                                   [&](const DeviceModel& d) { return d.name == n; });
            DeviceModel m;
            m.name = n;
            if (it != defaults.devices.end()) {
                m = *it;
                cohort.angles_per_device[n] = defaults.cohort.angles_per_device.at(n);
            }
            cfg.devices.push_back(m);
        }
    }

    std::set<std::string> known{"config_version", "cohort.regions", "devices"};
    auto get = [&](const std::string& key) {
        known.insert(key);
        return root[key];
    };

    if (auto n = get("cohort.subject_count")) {
        cohort.subject_count = scalar<int>(n, "cohort.subject_count");
    }
    if (auto n = get("cohort.seed")) {
        cohort.seed = scalar<std::uint64_t>(n, "cohort.seed");
    }
    if (auto n = get("cohort.angle_jitter_sd")) {
        cohort.angle_jitter_sd = scalar<double>(n, "cohort.angle_jitter_sd");
    }
    if (auto n = get("cohort.base_mean")) {
        cohort.base_mean = lab(numbers(n, "cohort.base_mean", 3));
    }
    if (auto n = get("cohort.base_cov")) {
        cohort.base_cov = to_matrix(numbers(n, "cohort.base_cov", 9));
    }
    for (auto& region : cohort.regions) {
        const std::string p = "region." + region.name + ".";
        if (auto n = get(p + "offset_mean")) {
            region.offset_mean = lab(numbers(n, p + "offset_mean", 3));
        }
        if (auto n = get(p + "offset_sd")) {
            region.offset_sd = arr3(numbers(n, p + "offset_sd", 3));
        }
    }
    for (auto& dev : cfg.devices) {
        const std::string p = "device." + dev.name + ".";
        if (auto n = get(p + "reference")) {
            dev.reference = scalar<bool>(n, p + "reference");
        }
        if (auto n = get(p + "angles")) {
            cohort.angles_per_device[dev.name] = scalar<int>(n, p + "angles");
        }
        if (auto n = get(p + "gain")) {
            dev.gain = to_matrix(numbers(n, p + "gain", 9));
        }
        if (auto n = get(p + "bias")) {
            const auto v = numbers(n, p + "bias", 3);
            dev.bias = Eigen::Vector3d(v[0], v[1], v[2]);
        }
        if (auto n = get(p + "noise_sigma")) {
            dev.noise_sigma = arr3(numbers(n, p + "noise_sigma", 3));
        }
        if (auto n = get(p + "capture_sigma")) {
            dev.capture_sigma = arr3(numbers(n, p + "capture_sigma", 3));
        }
        if (auto n = get(p + "region_exposure")) {
            const auto v = numbers(n, p + "region_exposure", cohort.regions.size());
            dev.region_exposure.clear();
            for (std::size_t i = 0; i < v.size(); ++i) {
                dev.region_exposure[cohort.regions[i].name] = v[i];
            }
        }
        if (auto n = get(p + "quantize_bits")) {
            dev.quantize_bits = scalar<int>(n, p + "quantize_bits");
        }
    }

    for (const auto& kv : root) {
        const auto key = kv.first.as<std::string>();
        if (!known.contains(key)) {
            throw ValidationError("config: unknown key '" + key + "'");
        }
    }

    cohort.validate();
    for (const auto& dev : cfg.devices) {
        dev.validate();
    }
    return cfg;
}

SimulatorConfig load(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config file '" + path + "'");
    }
    std::ostringstream text;
    text << in.rdbuf();
    try {
        return parse(text.str());
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

std::string dump(const SimulatorConfig& cfg)
{
    const auto& c = cfg.cohort;
    std::ostringstream out;
    out << "# dermacal simulator configuration\n";
    out << "config_version: " << kConfigVersion << "\n\n";
    out << "cohort.subject_count: " << c.subject_count << "\n";
    out << "cohort.seed: " << c.seed << "\n";
    out << "cohort.base_mean: " << list({c.base_mean.l, c.base_mean.a, c.base_mean.b}) << "\n";
    out << "cohort.base_cov: " << matrix(c.base_cov) << "\n";
    out << "cohort.angle_jitter_sd: " << shortest(c.angle_jitter_sd) << "\n";
    out << "cohort.regions: [";
    for (std::size_t i = 0; i < c.regions.size(); ++i) {
        out << (i ? ", " : "") << c.regions[i].name;
    }
    out << "]\n\n";
    for (const auto& r : c.regions) {
        const auto& m = r.offset_mean;
        out << "region." << r.name << ".offset_mean: " << list({m.l, m.a, m.b}) << "\n";
        out << "region." << r.name << ".offset_sd: " << list(r.offset_sd) << "\n";
    }
    out << "\ndevices: [";
    for (std::size_t i = 0; i < cfg.devices.size(); ++i) {
        out << (i ? ", " : "") << cfg.devices[i].name;
    }
    out << "]\n";
    for (const auto& d : cfg.devices) {
        const std::string p = "device." + d.name + ".";
        out << "\n" << p << "reference: " << (d.reference ? "true" : "false") << "\n";
        if (auto it = c.angles_per_device.find(d.name); it != c.angles_per_device.end()) {
            out << p << "angles: " << it->second << "\n";
        }
        out << p << "gain: " << matrix(d.gain) << "\n";
        out << p << "bias: " << list({d.bias(0), d.bias(1), d.bias(2)}) << "\n";
        out << p << "noise_sigma: " << list(d.noise_sigma) << "\n";
        out << p << "capture_sigma: " << list(d.capture_sigma) << "\n";
        if (!d.region_exposure.empty()) {
            out << p << "region_exposure: [";
            for (std::size_t i = 0; i < c.regions.size(); ++i) {
                out << (i ? ", " : "") << shortest(d.exposure(c.regions[i].name));
            }
            out << "]\n";
        }
        out << p << "quantize_bits: " << d.quantize_bits << "\n";
    }
    return out.str();
}

} // namespace dermacal::sim_config

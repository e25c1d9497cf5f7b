#include "dermacal/run_config.hpp"

#include "dermacal/error.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <sstream>

namespace dermacal::run_config {

namespace {

template <class T>
T scalar(const YAML::Node& node, const std::string& key)
{
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        throw ValidationError("config key '" + key + "': invalid value '" + node.Scalar() + "'");
    }
}

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

} // namespace

std::set<Analysis> parse_analyses(std::string_view text)
{
    const std::string t = trim(text);
    if (t == "all") {
        return {kAllAnalyses.begin(), kAllAnalyses.end()};
    }
    std::set<Analysis> out;
    if (t == "none" || t.empty()) {
        return out;
    }
    std::size_t start = 0;
    while (start <= t.size()) {
        auto comma = t.find(',', start);
        if (comma == std::string::npos) {
            comma = t.size();
        }
        out.insert(parse_analysis(trim(std::string_view(t).substr(start, comma - start))));
        start = comma + 1;
    }
    return out;
}

stats::IccForm parse_icc_form(std::string_view text)
{
    if (text == "consistency") {
        return stats::IccForm::Consistency;
    }
    if (text == "absolute" || text == "absolute_agreement") {
        return stats::IccForm::Absolute;
    }
    throw ValidationError("icc form must be consistency or absolute, got '" + std::string(text) +
                          "'");
}

RunConfig parse(const std::string& yaml_text, RunConfig cfg)
{
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        throw ValidationError(std::string("run config: YAML syntax error: ") + e.what());
    }
    if (root.IsNull()) {
        return cfg;
    }
    if (!root.IsMap()) {
        throw ValidationError("run config: top level must be a key-value mapping");
    }
    for (const auto& kv : root) {
        const auto key = kv.first.as<std::string>();
        const YAML::Node& v = kv.second;
        if (key == "input") {
            cfg.inputs.clear();
            if (v.IsSequence()) {
                for (const auto& item : v) {
                    cfg.inputs.push_back(scalar<std::string>(item, key));
                }
            } else {
                cfg.inputs.push_back(scalar<std::string>(v, key));
            }
        } else if (key == "reference_device") {
            cfg.reference_device = scalar<std::string>(v, key);
        } else if (key == "folds") {
            cfg.folds = scalar<int>(v, key);
        } else if (key == "seed") {
            cfg.seed = scalar<std::uint64_t>(v, key);
        } else if (key == "threshold") {
            cfg.threshold = scalar<double>(v, key);
        } else if (key == "analyses") {
            if (v.IsSequence()) {
                cfg.analyses.clear();
                for (const auto& item : v) {
                    cfg.analyses.insert(parse_analysis(scalar<std::string>(item, key)));
                }
            } else {
                cfg.analyses = parse_analyses(scalar<std::string>(v, key));
            }
        } else if (key == "out_dir") {
            cfg.out_dir = scalar<std::string>(v, key);
        } else if (key == "format") {
            cfg.format = scalar<std::string>(v, key);
        } else if (key == "icc_form") {
            cfg.icc_form = parse_icc_form(scalar<std::string>(v, key));
        } else {
            throw ValidationError("run config: unknown key '" + key + "'");
        }
    }
    return cfg;
}

RunConfig load(const std::string& path, RunConfig base)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open run config '" + path + "'");
    }
    std::ostringstream text;
    text << in.rdbuf();
    try {
        return parse(text.str(), std::move(base));
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

} // namespace dermacal::run_config

#include "dermacal/pipeline.hpp"

#include "dermacal/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

namespace dermacal {

namespace {

constexpr std::array<std::string_view, 7> kAnalysisNames{
    "deltae", "ccm", "indices", "icc", "bland_altman", "anova", "sensitivity"};

} // namespace

std::string_view to_string(Analysis a) { return kAnalysisNames[static_cast<std::size_t>(a)]; }

Analysis parse_analysis(std::string_view name)
{
    for (std::size_t i = 0; i < kAnalysisNames.size(); ++i) {
        if (kAnalysisNames[i] == name) {
            return static_cast<Analysis>(i);
        }
    }
    throw ValidationError("unknown analysis '" + std::string(name) +
                          "' (expected deltae, ccm, indices, icc, bland_altman, anova, sensitivity)");
}

void RunConfig::validate() const
{
    if (folds < 2) {
        throw ValidationError("folds must be >= 2, got " + std::to_string(folds));
    }
    if (!(threshold > 0.0) || !std::isfinite(threshold)) {
        throw ValidationError("threshold must be a positive number");
    }
    if (format != "json" && format != "markdown" && format != "both") {
        throw ValidationError("format must be json, markdown or both, got '" + format + "'");
    }
    if (reference_device.empty()) {
        throw ValidationError("reference device must not be empty");
    }
}

DeltaEStats summarize_delta_e(std::span<const double> values, double threshold)
{
    DeltaEStats s;
    s.n = values.size();
    if (values.empty()) {
        return s;
    }
    s.mean = stats::mean(values);
    s.sd = stats::sample_sd(values);
    s.median = stats::median(values);
    s.p95 = stats::percentile(values, 0.95);
    const auto ok = std::count_if(values.begin(), values.end(),
                                  [&](double v) { return v < threshold; });
    s.acceptable_fraction = static_cast<double>(ok) / static_cast<double>(values.size());
    return s;
}

namespace pipeline {

namespace {

using CellKey = std::pair<std::string, std::string>; // subject, region

// Rethrows library errors with the failing stage named, keeping the type
// so the CLI exit code is unchanged.
template <class F>
auto stage(std::string_view name, F&& fn)
{
    const std::string p = "stage '" + std::string(name) + "': ";
    try {
        return fn();
    } catch (const SingularFitError& e) {
        throw SingularFitError(p + e.what(), e.rank());
    } catch (const InsufficientDataError& e) {
        throw InsufficientDataError(p + e.what());
    } catch (const InfeasibleError& e) {
        throw InfeasibleError(p + e.what());
    } catch (const DomainError& e) {
        throw DomainError(p + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(p + e.what());
    } catch (const IoError& e) {
        throw IoError(p + e.what());
    }
}

struct Converted {
    LinearRgb lin;
    LabColor lab;
};

LabColor mean_lab(const std::vector<LabColor>& v)
{
    LabColor m;
    for (const auto& c : v) {
        m.l += c.l;
        m.a += c.a;
        m.b += c.b;
    }
    const double n = static_cast<double>(v.size());
    return {m.l / n, m.a / n, m.b / n};
}

double index_value(const std::string& measure, const LabColor& lab)
{
    if (measure == "MI") {
        return clinical::melanin_index(lab);
    }
    if (measure == "EI") {
        return clinical::erythema_index(lab);
    }
    if (measure == "ITA") {
        return clinical::ita(lab);
    }
    if (measure == "L") {
        return lab.l;
    }
    if (measure == "a") {
        return lab.a;
    }
    return lab.b;
}

const std::array<std::string, 6> kMeasures{"MI", "EI", "ITA", "L", "a", "b"};

} // namespace

Pairing pair_records(std::span<const PatchRecord> first, std::span<const PatchRecord> second)
{
    std::map<CellKey, std::vector<const PatchRecord*>> by_cell;
    for (const auto& r : first) {
        by_cell[{r.subject_id, r.region}].push_back(&r);
    }
    Pairing out;
    for (const auto& r : second) {
        auto it = by_cell.find({r.subject_id, r.region});
        if (it == by_cell.end()) {
            ++out.unmatched;
            continue;
        }
        const PatchRecord* best = nullptr;
        for (const auto* cand : it->second) {
            if (best == nullptr) {
                best = cand;
                continue;
            }
            const int d = std::abs(cand->angle - r.angle);
            const int db = std::abs(best->angle - r.angle);
            if (d < db || (d == db && cand->angle < best->angle)) {
                best = cand;
            }
        }
        PairedSample s;
        s.src = colorspace::srgb_decode(r.rgb);
        s.ref = colorspace::srgb_decode(best->rgb);
        s.key = {r.subject_id, r.region, r.angle};
        out.samples.push_back(s);
        out.sources.push_back(&r);
    }
    return out;
}

ReliabilityReport run_analysis(const RunConfig& cfg, std::span<const PatchRecord> records)
{
    cfg.validate();
    if (records.empty()) {
        throw ValidationError("no patch records to analyse");
    }

    ReliabilityReport report;
    report.config = cfg;

    // convert
    std::map<std::string, std::vector<PatchRecord>> by_device;
    std::map<const PatchRecord*, Converted> converted;
    stage("convert", [&] {
        for (const auto& r : records) {
            by_device[r.device].push_back(r);
        }
        // Key order makes every downstream sum independent of input order.
        for (auto& [device, recs] : by_device) {
            std::sort(recs.begin(), recs.end(), [](const PatchRecord& x, const PatchRecord& y) {
                return record_key(x) < record_key(y);
            });
        }
        for (const auto& [device, recs] : by_device) {
            for (const auto& r : recs) {
                const LinearRgb lin = colorspace::srgb_decode(r.rgb);
                converted[&r] = {lin, colorspace::linear_to_lab(lin)};
            }
        }
        return 0;
    });

    const std::string& ref_name = cfg.reference_device;
    const bool has_reference = by_device.contains(ref_name);
    std::vector<std::string> devices;
    if (has_reference) {
        devices.push_back(ref_name);
    }
    for (const auto& [device, recs] : by_device) {
        if (device != ref_name) {
            devices.push_back(device);
        }
    }
    const std::vector<std::string> consumers(devices.begin() + (has_reference ? 1 : 0),
                                             devices.end());

    // Dataset summary.
    {
        auto& ds = report.dataset;
        ds.records = records.size();
        std::set<std::string> subjects;
        std::map<std::string, std::size_t> regions;
        for (const auto& r : records) {
            subjects.insert(r.subject_id);
            ++regions[r.region];
        }
        ds.subjects = subjects.size();
        ds.regions.assign(regions.begin(), regions.end());
        for (const auto& device : devices) {
            const auto& recs = by_device.at(device);
            DeviceSummary d;
            d.device = device;
            d.reference = device == ref_name;
            d.records = recs.size();
            std::set<std::string> subj;
            std::vector<LabColor> labs;
            for (const auto& r : recs) {
                subj.insert(r.subject_id);
                labs.push_back(converted.at(&r).lab);
                d.mean_rgb[0] += 255.0 * r.rgb.r;
                d.mean_rgb[1] += 255.0 * r.rgb.g;
                d.mean_rgb[2] += 255.0 * r.rgb.b;
            }
            for (auto& c : d.mean_rgb) {
                c /= static_cast<double>(recs.size());
            }
            d.subjects = subj.size();
            d.mean_lab = mean_lab(labs);
            ds.devices.push_back(d);
        }
    }

    const bool pairwise = cfg.enabled(Analysis::DeltaE) || cfg.enabled(Analysis::Ccm) ||
                          cfg.enabled(Analysis::Icc) || cfg.enabled(Analysis::BlandAltman) ||
                          cfg.enabled(Analysis::Anova) || cfg.enabled(Analysis::Sensitivity);
    if (pairwise && !has_reference) {
        throw ValidationError("reference device '" + ref_name + "' not present in the input");
    }

    // pair
    std::map<std::string, Pairing> pairings; // consumer -> pairs against the reference
    if (pairwise) {
        stage("pair", [&] {
            for (const auto& c : consumers) {
                pairings[c] = pair_records(by_device.at(ref_name), by_device.at(c));
            }
            std::size_t total = 0;
            for (const auto& [c, p] : pairings) {
                total += p.samples.size();
            }
            if (total == 0) {
                throw InfeasibleError("pairing against reference '" + ref_name +
                                      "' produced zero pairs");
            }
            return 0;
        });
    }

    auto delta_e = [](const PairedSample& s) {
        return colorspace::ciede2000(colorspace::linear_to_lab(s.ref),
                                     colorspace::linear_to_lab(s.src));
    };

    // dE
    std::map<std::string, std::vector<double>> raw_de;
    if (pairwise) {
        stage("deltae", [&] {
            for (const auto& [c, p] : pairings) {
                auto& v = raw_de[c];
                for (const auto& s : p.samples) {
                    v.push_back(delta_e(s));
                }
            }
            if (cfg.enabled(Analysis::DeltaE)) {
                std::vector<DevicePairDeltaE> table;
                for (std::size_t i = 0; i < devices.size(); ++i) {
                    for (std::size_t j = i + 1; j < devices.size(); ++j) {
                        DevicePairDeltaE e;
                        e.first = devices[i];
                        e.second = devices[j];
                        std::vector<double> values;
                        if (i == 0) {
                            values = raw_de.at(devices[j]);
                            e.unmatched = pairings.at(devices[j]).unmatched;
                        } else {
                            const auto p = pair_records(by_device.at(devices[i]),
                                                        by_device.at(devices[j]));
                            for (const auto& s : p.samples) {
                                values.push_back(delta_e(s));
                            }
                            e.unmatched = p.unmatched;
                        }
                        e.stats = summarize_delta_e(values, cfg.threshold);
                        table.push_back(std::move(e));
                    }
                }
                report.deltae = std::move(table);
            }
            return 0;
        });
    }

    // CCM CV and corrected dE
    std::map<const PatchRecord*, LabColor> corrected;
    if (cfg.enabled(Analysis::Ccm)) {
        stage("ccm", [&] {
            std::vector<DeviceCalibration> out;
            for (const auto& c : consumers) {
                const auto& p = pairings.at(c);
                if (p.samples.empty()) {
                    throw InfeasibleError("device '" + c + "' has no pairs with the reference");
                }
                DeviceCalibration dc;
                dc.device = c;
                dc.cv = calibration::crossval_ccm(p.samples, cfg.folds, cfg.seed);
                dc.ccm = calibration::ccm_fit(p.samples);
                dc.before = summarize_delta_e(dc.cv.before, cfg.threshold);
                dc.after = summarize_delta_e(dc.cv.after, cfg.threshold);
                for (std::size_t i = 0; i < p.samples.size(); ++i) {
                    corrected[p.sources[i]] = colorspace::linear_to_lab(dc.cv.corrected[i]);
                }
                out.push_back(std::move(dc));
            }
            report.ccm = std::move(out);
            return 0;
        });
    }

    // indices
    if (cfg.enabled(Analysis::Indices)) {
        stage("indices", [&] {
            std::vector<IndexSummary> out;
            for (const auto& device : devices) {
                IndexSummary s;
                s.device = device;
                const auto& recs = by_device.at(device);
                s.n = recs.size();
                for (const auto& r : recs) {
                    const auto idx = clinical::indices(converted.at(&r).lab);
                    s.melanin_index += idx.melanin_index;
                    s.erythema_index += idx.erythema_index;
                    s.ita_degrees += idx.ita_degrees;
                    s.ita_degenerate += idx.ita_degenerate ? 1 : 0;
                }
                const double n = static_cast<double>(s.n);
                s.melanin_index /= n;
                s.erythema_index /= n;
                s.ita_degrees /= n;
                out.push_back(s);
            }
            report.indices = std::move(out);
            return 0;
        });
    }

    // Angle-averaged (subject, region) cells, one Lab per rater.
    const bool use_corrected = cfg.enabled(Analysis::Ccm);
    std::vector<std::string> raters;
    std::vector<std::vector<LabColor>> cell_values; // complete cells only
    std::size_t incomplete = 0;
    const bool need_cells = cfg.enabled(Analysis::Icc) || cfg.enabled(Analysis::BlandAltman) ||
                            cfg.enabled(Analysis::Sensitivity);
    if (need_cells) {
        raters = devices;
        std::map<CellKey, std::vector<std::vector<LabColor>>> cells;
        auto add = [&](const PatchRecord& r, std::size_t rater, const LabColor& lab) {
            auto& v = cells[{r.subject_id, r.region}];
            v.resize(raters.size());
            v[rater].push_back(lab);
        };
        for (const auto& r : by_device.at(ref_name)) {
            add(r, 0, converted.at(&r).lab);
        }
        for (std::size_t k = 1; k < raters.size(); ++k) {
            if (use_corrected) {
                for (const auto* src : pairings.at(raters[k]).sources) {
                    add(*src, k, corrected.at(src));
                }
            } else {
                for (const auto& r : by_device.at(raters[k])) {
                    add(r, k, converted.at(&r).lab);
                }
            }
        }
        for (const auto& [key, per_rater] : cells) {
            const bool complete = std::all_of(per_rater.begin(), per_rater.end(),
                                              [](const auto& v) { return !v.empty(); });
            if (!complete) {
                ++incomplete;
                continue;
            }
            std::vector<LabColor> row;
            for (const auto& v : per_rater) {
                row.push_back(mean_lab(v));
            }
            cell_values.push_back(std::move(row));
        }
    }

    // ICC
    if (cfg.enabled(Analysis::Icc)) {
        stage("icc", [&] {
            IccSection sec;
            sec.raters = raters;
            sec.corrected = use_corrected;
            sec.complete_cells = cell_values.size();
            sec.incomplete_cells = incomplete;
            if (cell_values.empty()) {
                throw InfeasibleError("no (subject, region) cell is measured by every device");
            }
            for (const auto& m : kMeasures) {
                Eigen::MatrixXd y(static_cast<Eigen::Index>(cell_values.size()),
                                  static_cast<Eigen::Index>(raters.size()));
                for (std::size_t i = 0; i < cell_values.size(); ++i) {
                    for (std::size_t k = 0; k < raters.size(); ++k) {
                        y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                            index_value(m, cell_values[i][k]);
                    }
                }
                sec.measures.emplace_back(
                    m, stats::icc_3_1(stats::RatingsTable(std::move(y)), cfg.icc_form));
            }
            report.icc = std::move(sec);
            return 0;
        });
    }

    // Bland-Altman
    if (cfg.enabled(Analysis::BlandAltman)) {
        stage("bland_altman", [&] {
            std::vector<BlandAltmanEntry> out;
            for (std::size_t k = 1; k < raters.size(); ++k) {
                for (const std::string m : {"L", "a", "b"}) {
                    std::vector<double> x;
                    std::vector<double> y;
                    for (const auto& row : cell_values) {
                        x.push_back(index_value(m, row[k]));
                        y.push_back(index_value(m, row[0]));
                    }
                    out.push_back({raters[k], m, stats::bland_altman(x, y)});
                }
            }
            report.bland_altman = std::move(out);
            return 0;
        });
    }

    // ANOVA on pre-correction dE, one-way per factor.
    if (cfg.enabled(Analysis::Anova)) {
        stage("anova", [&] {
            AnovaSection sec;
            sec.response = "raw dE00 versus " + ref_name;
            std::vector<double> values;
            std::vector<std::string> region;
            std::vector<std::string> device;
            std::vector<std::string> angle;
            for (const auto& [c, p] : pairings) {
                const auto& de = raw_de.at(c);
                for (std::size_t i = 0; i < p.samples.size(); ++i) {
                    values.push_back(de[i]);
                    region.push_back(p.sources[i]->region);
                    device.push_back(c);
                    angle.push_back(std::to_string(p.sources[i]->angle));
                }
            }
            const std::array<std::pair<const char*, const std::vector<std::string>*>, 3> factors{
                {{"region", &region}, {"device", &device}, {"angle", &angle}}};
            for (const auto& [name, labels] : factors) {
                if (std::set<std::string>(labels->begin(), labels->end()).size() < 2) {
                    continue; // a single level explains nothing
                }
                sec.rows.push_back(stats::anova_eta2(values, *labels, name));
            }
            if (sec.rows.empty()) {
                throw InsufficientDataError("no factor has at least 2 levels");
            }
            std::vector<double> p;
            for (const auto& row : sec.rows) {
                p.push_back(row.p_value);
            }
            sec.bonferroni = stats::bonferroni(p, sec.alpha);
            report.anova = std::move(sec);
            return 0;
        });
    }

    // ITA sensitivity at the reference mean colour.
    if (cfg.enabled(Analysis::Sensitivity)) {
        stage("sensitivity", [&] {
            SensitivitySection sec;
            sec.at = report.dataset.devices.front().mean_lab;
            sec.partials = clinical::ita_sensitivity(sec.at);
            for (std::size_t k = 1; k < raters.size(); ++k) {
                DeviceItaError e;
                e.device = raters[k];
                e.cells = cell_values.size();
                std::vector<double> dl;
                std::vector<double> db;
                std::vector<double> predicted;
                std::vector<double> observed;
                for (const auto& row : cell_values) {
                    dl.push_back(row[k].l - row[0].l);
                    db.push_back(row[k].b - row[0].b);
                    predicted.push_back(sec.partials.predicted_ita_error(dl.back(), db.back()));
                    observed.push_back(clinical::ita(row[k]) - clinical::ita(row[0]));
                }
                e.sd_delta_l = stats::sample_sd(dl);
                e.sd_delta_b = stats::sample_sd(db);
                e.predicted_ita_sd = stats::sample_sd(predicted);
                e.observed_ita_sd = stats::sample_sd(observed);
                sec.devices.push_back(e);
            }
            report.sensitivity = std::move(sec);
            return 0;
        });
    }

    return report;
}

} // namespace pipeline
} // namespace dermacal

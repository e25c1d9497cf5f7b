#pragma once

#include "dermacal/calibration.hpp"
#include "dermacal/clinical.hpp"
#include "dermacal/patch.hpp"
#include "dermacal/stats.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace dermacal {

inline constexpr std::string_view kToolVersion = "0.1.0";

enum class Analysis { DeltaE, Ccm, Indices, Icc, BlandAltman, Anova, Sensitivity };

inline constexpr std::array<Analysis, 7> kAllAnalyses{
    Analysis::DeltaE, Analysis::Ccm,   Analysis::Indices,    Analysis::Icc,
    Analysis::BlandAltman, Analysis::Anova, Analysis::Sensitivity};

std::string_view to_string(Analysis a);
/// Accepts the report section names (deltae, ccm, indices, icc, bland_altman,
/// anova, sensitivity). Throws ValidationError otherwise.
Analysis parse_analysis(std::string_view name);

struct RunConfig {
    std::vector<std::string> inputs;
    std::string reference_device = "dslr";
    int folds = 5;
    std::uint64_t seed = 42;
    double threshold = 2.0;
    std::set<Analysis> analyses{kAllAnalyses.begin(), kAllAnalyses.end()};
    std::string out_dir = ".";
    std::string format = "both"; // json, markdown or both
    stats::IccForm icc_form = stats::IccForm::Consistency;

    bool enabled(Analysis a) const { return analyses.contains(a); }
    /// Throws ValidationError on k < 2, threshold <= 0 or an unknown format.
    void validate() const;
};

struct DeviceSummary {
    std::string device;
    bool reference = false;
    std::size_t records = 0;
    std::size_t subjects = 0;
    LabColor mean_lab;                 // mean of per-record Lab
    std::array<double, 3> mean_rgb{}; // 0-255 scale
};

struct DatasetSummary {
    std::size_t records = 0;
    std::size_t subjects = 0;
    std::vector<DeviceSummary> devices; // reference first, then by name
    std::vector<std::pair<std::string, std::size_t>> regions;
};

struct DeltaEStats {
    std::size_t n = 0;
    double mean = 0.0;
    double sd = 0.0;
    double median = 0.0;
    double p95 = 0.0;
    double acceptable_fraction = 0.0; // share of pairs with dE00 < threshold
};

DeltaEStats summarize_delta_e(std::span<const double> values, double threshold);

/// dE00 between two devices on records paired by (subject, region, nearest angle).
struct DevicePairDeltaE {
    std::string first;  // the side records are matched against
    std::string second;
    std::size_t unmatched = 0; // records of `second` without a partner
    DeltaEStats stats;
};

struct DeviceCalibration {
    std::string device;
    CvReport cv;
    Ccm ccm; // fitted on every pair, for export
    DeltaEStats before;
    DeltaEStats after;
};

struct IndexSummary {
    std::string device;
    std::size_t n = 0;
    double melanin_index = 0.0;
    double erythema_index = 0.0;
    double ita_degrees = 0.0;
    std::size_t ita_degenerate = 0;
};

struct IccSection {
    std::vector<std::string> raters;
    bool corrected = false; // consumer raters use out-of-fold corrected colour
    std::size_t complete_cells = 0;
    std::size_t incomplete_cells = 0;
    std::vector<std::pair<std::string, stats::IccResult>> measures; // MI, EI, ITA, L, a, b
};

struct BlandAltmanEntry {
    std::string device; // compared with the reference, device - reference
    std::string measure;
    stats::BlandAltman result;
};

struct AnovaSection {
    std::string response; // what the factors explain
    std::vector<stats::AnovaRow> rows;
    std::vector<stats::BonferroniDecision> bonferroni;
    double alpha = 0.05;
};

struct DeviceItaError {
    std::string device;
    std::size_t cells = 0;
    double sd_delta_l = 0.0;
    double sd_delta_b = 0.0;
    double predicted_ita_sd = 0.0; // linear propagation of the per-cell (dL*, db*)
    double observed_ita_sd = 0.0;
};

struct SensitivitySection {
    LabColor at; // reference-device mean Lab
    ItaSensitivity partials;
    std::vector<DeviceItaError> devices;
};

/// A section is present iff its analysis was enabled.
struct ReliabilityReport {
    RunConfig config;
    DatasetSummary dataset;
    std::optional<std::vector<DevicePairDeltaE>> deltae;
    std::optional<std::vector<DeviceCalibration>> ccm;
    std::optional<std::vector<IndexSummary>> indices;
    std::optional<IccSection> icc;
    std::optional<std::vector<BlandAltmanEntry>> bland_altman;
    std::optional<AnovaSection> anova;
    std::optional<SensitivitySection> sensitivity;
};

namespace pipeline {

/// Consumer record matched to the reference record with the same subject and
/// region and the nearest angle label (ties go to the lower label).
struct Pairing {
    std::vector<PairedSample> samples;
    std::vector<const PatchRecord*> sources; // consumer record of each sample
    std::size_t unmatched = 0;
};

Pairing pair_records(std::span<const PatchRecord> first, std::span<const PatchRecord> second);

/// Runs the enabled stages in dependency order:
/// convert, pair, dE, CCM CV, corrected dE, indices, ICC / Bland-Altman,
/// ANOVA, sensitivity. Errors from a stage are rethrown with its name.
ReliabilityReport run_analysis(const RunConfig& cfg, std::span<const PatchRecord> records);

} // namespace pipeline
} // namespace dermacal

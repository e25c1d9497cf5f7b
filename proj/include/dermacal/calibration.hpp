#pragma once

#include "dermacal/colorspace.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace dermacal {

/// Affine colour correction in linear RGB: corrected = a * src + b.
struct Ccm {
    Eigen::Matrix3d a = Eigen::Matrix3d::Identity();
    Eigen::Vector3d b = Eigen::Vector3d::Zero();
    std::string space = "linear_rgb";
    std::vector<std::string> warnings;

    static Ccm identity() { return {}; }
};

struct PairKey {
    std::string subject;
    std::string region;
    int angle = 0;
};

/// One consumer-device measurement matched to its reference-device counterpart.
struct PairedSample {
    LinearRgb src;
    LinearRgb ref;
    PairKey key;
};

struct FoldStats {
    int fold = 0;
    std::vector<std::string> test_subjects;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    double train_mean = 0.0; // corrected dE00 on the training samples
    double train_sd = 0.0;
    double test_mean = 0.0; // corrected dE00 on the held-out samples
    double test_sd = 0.0;
};

struct CvReport {
    int fold_count = 0;
    std::uint64_t seed = 0;
    std::vector<FoldStats> folds;
    double before_mean = 0.0;
    double before_sd = 0.0;
    double after_mean = 0.0;
    double after_sd = 0.0;
    double improvement_pct = 0.0;

    // Per-sample results, aligned with the input order.
    std::vector<int> fold_of_sample;
    std::vector<double> before;
    std::vector<double> after;
    std::vector<LinearRgb> corrected; // out-of-fold correction of src
};

namespace calibration {

inline constexpr double kConditionLimit = 1e8;
inline constexpr double kDeterminantWarning = 1e-6;
inline constexpr std::size_t kMinSamples = 4;

/// Ordinary least squares fit of sum ||a*src + b - ref||^2. Solved through the
/// normal equations; when their condition number exceeds kConditionLimit the
/// fit falls back to column-pivoted QR on the design matrix.
/// Throws InsufficientDataError (< 4 samples) or SingularFitError (rank < 4).
Ccm ccm_fit(std::span<const PairedSample> samples);

/// a*c + b, clipped to non-negative.
LinearRgb ccm_apply(const Ccm& m, const LinearRgb& c);

/// Training objective (unclipped affine residuals).
double sum_squared_error(const Ccm& m, std::span<const PairedSample> samples);

/// Deterministic subject -> fold assignment: distinct subjects are sorted,
/// shuffled with the seed, then dealt round-robin into k folds.
std::map<std::string, int> assign_subject_folds(std::span<const PairedSample> samples, int k,
                                                std::uint64_t seed);

/// Subject-grouped k-fold cross-validation of ccm_fit, scored in CIEDE2000.
CvReport crossval_ccm(std::span<const PairedSample> samples, int k, std::uint64_t seed);

} // namespace calibration
} // namespace dermacal

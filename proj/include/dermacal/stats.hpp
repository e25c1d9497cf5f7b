#pragma once

#include <Eigen/Core>

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dermacal::stats {

double mean(std::span<const double> v);
/// Sample (n - 1) standard deviation; 0 for fewer than two values.
double sample_sd(std::span<const double> v);
double median(std::span<const double> v);
/// Linear interpolation between closest ranks (R type 7 / numpy default), q in [0, 1].
double percentile(std::span<const double> v, double q);

/// n_targets x k_raters, complete cases only.
class RatingsTable {
public:
    explicit RatingsTable(Eigen::MatrixXd values);

    Eigen::Index targets() const { return values_.rows(); }
    Eigen::Index raters() const { return values_.cols(); }
    const Eigen::MatrixXd& values() const { return values_; }

private:
    Eigen::MatrixXd values_;
};

enum class IccForm {
    Consistency, // ICC(3,1), Shrout-Fleiss / McGraw-Wong ICC(C,1)
    Absolute,    // two-way mixed, absolute agreement, ICC(A,1)
};

std::string_view to_string(IccForm form);

/// Mean squares of the two-way (targets x raters) layout without replication.
struct TwoWayMeanSquares {
    double ms_rows = 0.0;
    double ms_cols = 0.0;
    double ms_error = 0.0;
    double df_rows = 0.0;
    double df_cols = 0.0;
    double df_error = 0.0;
};

TwoWayMeanSquares two_way_mean_squares(const RatingsTable& t);

struct IccResult {
    double icc = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    IccForm form = IccForm::Consistency;
    std::string interpretation;
    std::size_t targets = 0;
    std::size_t raters = 0;
};

/// < 0.50 poor, < 0.75 moderate, <= 0.90 good, > 0.90 excellent.
std::string icc_label(double icc);

/// Single-rater ICC from the two-way mean squares with a 95% F-based interval.
/// Throws InsufficientDataError for n < 3 or k < 2, InfeasibleError when the
/// table has no variance.
IccResult icc_3_1(const RatingsTable& t, IccForm form = IccForm::Consistency,
                  double alpha = 0.05);

struct BlandAltman {
    double bias = 0.0;
    double sd = 0.0;
    double loa_low = 0.0;
    double loa_high = 0.0;
    std::vector<double> differences; // x - y, per pair
    std::vector<double> means;       // (x + y) / 2, per pair
};

inline constexpr double kLoaZ = 1.96;

BlandAltman bland_altman(std::span<const double> x, std::span<const double> y);

struct AnovaRow {
    std::string factor;
    std::size_t groups = 0;
    std::size_t observations = 0;
    double ss_between = 0.0;
    double ss_within = 0.0;
    double df_between = 0.0;
    double df_within = 0.0;
    double f_statistic = 0.0;
    double p_value = 1.0;
    double eta_squared = 0.0;
    std::string effect_size;
};

/// eta^2 < 0.06 small, < 0.14 medium, otherwise large.
std::string eta_squared_label(double eta2);

/// One-way ANOVA of values grouped by the categorical labels.
AnovaRow anova_eta2(std::span<const double> values, std::span<const std::string> labels,
                    std::string factor = {});

struct BonferroniDecision {
    double p_value = 0.0;
    double adjusted = 0.0;
    bool significant = false; // p < alpha / m (strict)
};

std::vector<BonferroniDecision> bonferroni(std::span<const double> p_values, double alpha = 0.05);

} // namespace dermacal::stats

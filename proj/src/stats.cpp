#include "dermacal/stats.hpp"

#include "dermacal/error.hpp"

#include <boost/math/distributions/fisher_f.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace dermacal::stats {

namespace {

double f_quantile(double df1, double df2, double p)
{
    return boost::math::quantile(boost::math::fisher_f_distribution<double>(df1, df2), p);
}

double f_survival(double df1, double df2, double f)
{
    if (!std::isfinite(f)) {
        return 0.0;
    }
    return boost::math::cdf(
        boost::math::complement(boost::math::fisher_f_distribution<double>(df1, df2), f));
}

} // namespace

double mean(std::span<const double> v)
{
    if (v.empty()) {
        return 0.0;
    }
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(std::span<const double> v)
{
    if (v.size() < 2) {
        return 0.0;
    }
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) {
        ss += (x - m) * (x - m);
    }
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double percentile(std::span<const double> v, double q)
{
    if (v.empty()) {
        return 0.0;
    }
    std::vector<double> s(v.begin(), v.end());
    std::sort(s.begin(), s.end());
    const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, s.size() - 1);
    return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

double median(std::span<const double> v) { return percentile(v, 0.5); }

RatingsTable::RatingsTable(Eigen::MatrixXd values) : values_(std::move(values))
{
    if (values_.cols() < 2) {
        throw InsufficientDataError("ratings table needs at least 2 raters, got " +
                                    std::to_string(values_.cols()));
    }
    if (values_.rows() < 3) {
        throw InsufficientDataError("ratings table needs at least 3 targets, got " +
                                    std::to_string(values_.rows()));
    }
    if (!values_.allFinite()) {
        throw ValidationError("ratings table contains missing or non-finite cells");
    }
}

std::string_view to_string(IccForm form)
{
    return form == IccForm::Consistency ? "consistency" : "absolute_agreement";
}

TwoWayMeanSquares two_way_mean_squares(const RatingsTable& t)
{
    const auto& y = t.values();
    const double n = static_cast<double>(y.rows());
    const double k = static_cast<double>(y.cols());
    const double grand = y.mean();

    const double ss_total = (y.array() - grand).square().sum();
    const double ss_rows = k * (y.rowwise().mean().array() - grand).square().sum();
    const double ss_cols = n * (y.colwise().mean().array() - grand).square().sum();
    const double ss_error = std::max(ss_total - ss_rows - ss_cols, 0.0);

    TwoWayMeanSquares ms;
    ms.df_rows = n - 1.0;
    ms.df_cols = k - 1.0;
    ms.df_error = (n - 1.0) * (k - 1.0);
    ms.ms_rows = ss_rows / ms.df_rows;
    ms.ms_cols = ss_cols / ms.df_cols;
    ms.ms_error = ss_error / ms.df_error;
    return ms;
}

std::string icc_label(double icc)
{
    if (icc < 0.50) {
        return "poor";
    }
    if (icc < 0.75) {
        return "moderate";
    }
    if (icc <= 0.90) {
        return "good";
    }
    return "excellent";
}

IccResult icc_3_1(const RatingsTable& t, IccForm form, double alpha)
{
    const auto ms = two_way_mean_squares(t);
    const double n = static_cast<double>(t.targets());
    const double k = static_cast<double>(t.raters());
    const double msr = ms.ms_rows;
    const double msc = ms.ms_cols;
    const double mse = ms.ms_error;

    if (msr == 0.0 && mse == 0.0 && msc == 0.0) {
        throw InfeasibleError("icc: ratings have zero total variance, ICC is undefined");
    }

    double denom = msr + (k - 1.0) * mse;
    if (form == IccForm::Absolute) {
        denom += k * (msc - mse) / n;
    }
    if (denom == 0.0) {
        throw InfeasibleError("icc: zero between-target and residual variance, ICC is undefined");
    }

    IccResult r;
    r.form = form;
    r.targets = static_cast<std::size_t>(n);
    r.raters = static_cast<std::size_t>(k);
    r.icc = (msr - mse) / denom;

    const double q = 1.0 - alpha / 2.0;
    if (mse == 0.0 || r.icc >= 1.0) {
        // Perfect (or, for the absolute form, column-shift only) agreement.
        if (form == IccForm::Consistency || msc == 0.0) {
            r.ci_low = r.ci_high = r.icc;
            r.interpretation = icc_label(r.icc);
            return r;
        }
    }

    if (form == IccForm::Consistency) {
        const double f = msr / mse;
        const double fl = f / f_quantile(ms.df_rows, ms.df_error, q);
        const double fu = f * f_quantile(ms.df_error, ms.df_rows, q);
        r.ci_low = (fl - 1.0) / (fl + k - 1.0);
        r.ci_high = (fu - 1.0) / (fu + k - 1.0);
    } else {
        // McGraw & Wong (1996), Satterthwaite degrees of freedom.
        const double a = k * r.icc / (n * (1.0 - r.icc));
        const double b = 1.0 + k * r.icc * (n - 1.0) / (n * (1.0 - r.icc));
        const double num = a * msc + b * mse;
        const double v = num * num / ((a * msc) * (a * msc) / (k - 1.0) +
                                      (b * mse) * (b * mse) / ms.df_error);
        const double fu = f_quantile(ms.df_rows, v, q);
        const double fl = f_quantile(v, ms.df_rows, q);
        const double common = k * msc + (k * n - k - n) * mse;
        r.ci_low = n * (msr - fu * mse) / (fu * common + n * msr);
        r.ci_high = n * (fl * msr - mse) / (common + n * fl * msr);
    }
    r.ci_low = std::min(r.ci_low, r.icc);
    r.ci_high = std::max(r.ci_high, r.icc);
    r.interpretation = icc_label(r.icc);
    return r;
}

BlandAltman bland_altman(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size()) {
        throw ValidationError("bland_altman: length mismatch (" + std::to_string(x.size()) +
                              " vs " + std::to_string(y.size()) + ")");
    }
    if (x.size() < 2) {
        throw InsufficientDataError("bland_altman: need at least 2 pairs");
    }
    BlandAltman ba;
    ba.differences.resize(x.size());
    ba.means.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        ba.differences[i] = x[i] - y[i];
        ba.means[i] = (x[i] + y[i]) / 2.0;
    }
    ba.bias = mean(ba.differences);
    ba.sd = sample_sd(ba.differences);
    ba.loa_low = ba.bias - kLoaZ * ba.sd;
    ba.loa_high = ba.bias + kLoaZ * ba.sd;
    return ba;
}

std::string eta_squared_label(double eta2)
{
    if (eta2 < 0.06) {
        return "small";
    }
    if (eta2 < 0.14) {
        return "medium";
    }
    return "large";
}

AnovaRow anova_eta2(std::span<const double> values, std::span<const std::string> labels,
                    std::string factor)
{
    if (values.size() != labels.size()) {
        throw ValidationError("anova: " + std::to_string(values.size()) + " values but " +
                              std::to_string(labels.size()) + " labels");
    }
    std::map<std::string, std::vector<double>> groups;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            throw DomainError("anova: value " + std::to_string(i) + " is not finite");
        }
        groups[labels[i]].push_back(values[i]);
    }
    if (groups.size() < 2) {
        throw InsufficientDataError("anova: factor '" + factor + "' needs at least 2 groups");
    }
    for (const auto& [label, g] : groups) {
        if (g.size() < 2) {
            throw InsufficientDataError("anova: group '" + label + "' of factor '" + factor +
                                        "' has fewer than 2 observations");
        }
    }

    const double grand = mean(values);
    AnovaRow row;
    row.factor = std::move(factor);
    row.groups = groups.size();
    row.observations = values.size();
    for (const auto& [label, g] : groups) {
        const double gm = mean(g);
        row.ss_between += static_cast<double>(g.size()) * (gm - grand) * (gm - grand);
        for (double v : g) {
            row.ss_within += (v - gm) * (v - gm);
        }
    }
    if (row.ss_between == 0.0 && row.ss_within == 0.0) {
        throw InfeasibleError("anova: factor '" + row.factor +
                              "' has zero within- and between-group variance");
    }
    row.df_between = static_cast<double>(row.groups - 1);
    row.df_within = static_cast<double>(row.observations - row.groups);
    if (row.ss_within == 0.0) {
        row.f_statistic = std::numeric_limits<double>::infinity();
    } else {
        row.f_statistic = (row.ss_between / row.df_between) / (row.ss_within / row.df_within);
    }
    row.p_value = f_survival(row.df_between, row.df_within, row.f_statistic);
    row.eta_squared = row.ss_between / (row.ss_between + row.ss_within);
    row.effect_size = eta_squared_label(row.eta_squared);
    return row;
}

std::vector<BonferroniDecision> bonferroni(std::span<const double> p_values, double alpha)
{
    const double m = static_cast<double>(p_values.size());
    std::vector<BonferroniDecision> out;
    out.reserve(p_values.size());
    for (double p : p_values) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw DomainError("bonferroni: p-value " + std::to_string(p) + " outside [0, 1]");
        }
        out.push_back({p, std::min(1.0, m * p), p < alpha / m});
    }
    return out;
}

} // namespace dermacal::stats

#include "dermacal/calibration.hpp"

#include "dermacal/error.hpp"
#include "dermacal/rng.hpp"
#include "dermacal/stats.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace dermacal::calibration {

namespace {

Eigen::Vector3d vec(const LinearRgb& c) { return {c.r, c.g, c.b}; }

double delta_e(const LinearRgb& ref, const LinearRgb& other)
{
    return colorspace::ciede2000(colorspace::linear_to_lab(ref), colorspace::linear_to_lab(other));
}

} // namespace

Ccm ccm_fit(std::span<const PairedSample> samples)
{
    const auto n = samples.size();
    if (n < kMinSamples) {
        throw InsufficientDataError("ccm_fit: need at least 4 paired samples, got " +
                                    std::to_string(n));
    }

    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 4);
    Eigen::MatrixXd y(static_cast<Eigen::Index>(n), 3);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        const auto& s = samples[i];
        x.row(row) << s.src.r, s.src.g, s.src.b, 1.0;
        y.row(row) << s.ref.r, s.ref.g, s.ref.b;
        if (!x.row(row).allFinite() || !y.row(row).allFinite()) {
            throw DomainError("ccm_fit: sample " + std::to_string(i) + " is not finite");
        }
    }

    const Eigen::Matrix4d xtx = x.transpose() * x;
    const Eigen::Vector4d sv = Eigen::JacobiSVD<Eigen::Matrix4d>(xtx).singularValues();
    const double condition = sv(3) > 0.0 ? sv(0) / sv(3) : INFINITY;

    Eigen::Matrix<double, 4, 3> coef;
    if (condition <= kConditionLimit) {
        coef = xtx.ldlt().solve(x.transpose() * y);
    } else {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
        if (qr.rank() < 4) {
            throw SingularFitError("ccm_fit: design matrix [src, 1] is rank deficient (rank " +
                                       std::to_string(qr.rank()) + " of 4)",
                                   static_cast<int>(qr.rank()));
        }
        coef = qr.solve(y);
    }

    Ccm m;
    m.a = coef.topRows<3>().transpose();
    m.b = coef.row(3).transpose();
    if (!m.a.allFinite() || !m.b.allFinite()) {
        throw SingularFitError("ccm_fit: solution is not finite", 0);
    }
    if (std::abs(m.a.determinant()) < kDeterminantWarning) {
        std::ostringstream msg;
        msg << "near-singular matrix: |det(a)| = " << std::abs(m.a.determinant());
        m.warnings.push_back(msg.str());
    }
    return m;
}

LinearRgb ccm_apply(const Ccm& m, const LinearRgb& c)
{
    const Eigen::Vector3d out = m.a * vec(c) + m.b;
    return {std::max(out(0), 0.0), std::max(out(1), 0.0), std::max(out(2), 0.0)};
}

double sum_squared_error(const Ccm& m, std::span<const PairedSample> samples)
{
    double sse = 0.0;
    for (const auto& s : samples) {
        sse += (m.a * vec(s.src) + m.b - vec(s.ref)).squaredNorm();
    }
    return sse;
}

std::map<std::string, int> assign_subject_folds(std::span<const PairedSample> samples, int k,
                                                std::uint64_t seed)
{
    if (k < 2) {
        throw ValidationError("crossval: fold count must be >= 2, got " + std::to_string(k));
    }
    std::set<std::string> distinct;
    for (const auto& s : samples) {
        distinct.insert(s.key.subject);
    }
    if (static_cast<std::size_t>(k) > distinct.size()) {
        throw InfeasibleError("crossval: " + std::to_string(k) + " folds requested but only " +
                              std::to_string(distinct.size()) + " distinct subjects");
    }
    std::vector<std::string> subjects(distinct.begin(), distinct.end());
    Rng rng(seed);
    rng.shuffle(subjects);

    std::map<std::string, int> folds;
    for (std::size_t i = 0; i < subjects.size(); ++i) {
        folds[subjects[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
    }
    return folds;
}

CvReport crossval_ccm(std::span<const PairedSample> samples, int k, std::uint64_t seed)
{
    if (k < 2) {
        throw ValidationError("crossval: fold count must be >= 2, got " + std::to_string(k));
    }
    if (samples.size() < 2 * static_cast<std::size_t>(k)) {
        throw InsufficientDataError("crossval: need at least " + std::to_string(2 * k) +
                                    " samples for " + std::to_string(k) + " folds, got " +
                                    std::to_string(samples.size()));
    }
    const auto fold_of_subject = assign_subject_folds(samples, k, seed);

    CvReport report;
    report.fold_count = k;
    report.seed = seed;
    const auto n = samples.size();
    report.fold_of_sample.resize(n);
    report.before.resize(n);
    report.after.resize(n);
    report.corrected.resize(n);

    for (std::size_t i = 0; i < n; ++i) {
        report.fold_of_sample[i] = fold_of_subject.at(samples[i].key.subject);
        report.before[i] = delta_e(samples[i].ref, samples[i].src);
    }

    for (int f = 0; f < k; ++f) {
        std::vector<PairedSample> train;
        std::vector<std::size_t> test_idx;
        for (std::size_t i = 0; i < n; ++i) {
            if (report.fold_of_sample[i] == f) {
                test_idx.push_back(i);
            } else {
                train.push_back(samples[i]);
            }
        }
        const Ccm m = ccm_fit(train);

        std::vector<double> train_de;
        train_de.reserve(train.size());
        for (const auto& s : train) {
            train_de.push_back(delta_e(s.ref, ccm_apply(m, s.src)));
        }
        std::vector<double> test_de;
        test_de.reserve(test_idx.size());
        for (auto i : test_idx) {
            report.corrected[i] = ccm_apply(m, samples[i].src);
            report.after[i] = delta_e(samples[i].ref, report.corrected[i]);
            test_de.push_back(report.after[i]);
        }

        FoldStats fs;
        fs.fold = f;
        for (const auto& [subject, fold] : fold_of_subject) {
            if (fold == f) {
                fs.test_subjects.push_back(subject);
            }
        }
        fs.n_train = train.size();
        fs.n_test = test_idx.size();
        fs.train_mean = stats::mean(train_de);
        fs.train_sd = stats::sample_sd(train_de);
        fs.test_mean = stats::mean(test_de);
        fs.test_sd = stats::sample_sd(test_de);
        report.folds.push_back(std::move(fs));
    }

    report.before_mean = stats::mean(report.before);
    report.before_sd = stats::sample_sd(report.before);
    report.after_mean = stats::mean(report.after);
    report.after_sd = stats::sample_sd(report.after);
    report.improvement_pct = report.before_mean > 0.0
                                 ? 100.0 * (1.0 - report.after_mean / report.before_mean)
                                 : 0.0;
    return report;
}

} // namespace dermacal::calibration

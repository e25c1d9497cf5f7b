#include "dermacal/calibration.hpp"
#include "dermacal/error.hpp"
#include "dermacal/rng.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <set>

using namespace dermacal;
using namespace dermacal::calibration;
using Catch::Matchers::WithinAbs;

namespace {

LinearRgb random_rgb(Rng& rng, double lo = 0.05, double hi = 0.95)
{
    auto u = [&] { return lo + (hi - lo) * rng.uniform(); };
    return {u(), u(), u()};
}

Eigen::Vector3d v(const LinearRgb& c) { return {c.r, c.g, c.b}; }

std::vector<PairedSample> affine_samples(const Eigen::Matrix3d& a, const Eigen::Vector3d& b,
                                         int subjects, int per_subject, double noise,
                                         std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<PairedSample> out;
    for (int s = 0; s < subjects; ++s) {
        for (int i = 0; i < per_subject; ++i) {
            const auto src = random_rgb(rng);
            Eigen::Vector3d ref = a * v(src) + b;
            for (int c = 0; c < 3; ++c) {
                ref(c) += noise * rng.normal();
            }
            out.push_back({src, {ref(0), ref(1), ref(2)}, {"S" + std::to_string(s), "chin", i}});
        }
    }
    return out;
}

const Eigen::Matrix3d kA = (Eigen::Matrix3d() << 1.10, 0.05, -0.02,
                            -0.03, 0.95, 0.04,
                            0.01, -0.06, 1.20).finished();
const Eigen::Vector3d kB(0.02, -0.01, 0.03);

} // namespace

TEST_CASE("noiseless affine data is recovered exactly")
{
    const auto samples = affine_samples(kA, kB, 10, 10, 0.0, 1);
    const Ccm m = ccm_fit(samples);
    CHECK((m.a - kA).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((m.b - kB).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(m.space == "linear_rgb");
    CHECK(m.warnings.empty());
}

TEST_CASE("fitting a device against itself gives the identity")
{
    Rng rng(2);
    std::vector<PairedSample> samples;
    for (int i = 0; i < 200; ++i) {
        const auto c = random_rgb(rng);
        samples.push_back({c, c, {"S", "r", i}});
    }
    const Ccm m = ccm_fit(samples);
    CHECK((m.a - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(m.b.cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("least squares solution matches an SVD solve of the design matrix")
{
    const auto samples = affine_samples(kA, kB, 8, 12, 0.01, 3);
    const Ccm m = ccm_fit(samples);

    Eigen::MatrixXd x(static_cast<Eigen::Index>(samples.size()), 4);
    Eigen::MatrixXd y(static_cast<Eigen::Index>(samples.size()), 3);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        x.row(r) << samples[i].src.r, samples[i].src.g, samples[i].src.b, 1.0;
        y.row(r) << samples[i].ref.r, samples[i].ref.g, samples[i].ref.b;
    }
    const Eigen::MatrixXd coef =
        x.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(y);
    CHECK((m.a - coef.topRows(3).transpose()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((m.b - coef.row(3).transpose()).cwiseAbs().maxCoeff() < 1e-10);

    // Residuals are orthogonal to every design column.
    Eigen::MatrixXd fitted(x.rows(), 3);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        fitted.row(i) = (m.a * x.row(i).head<3>().transpose() + m.b).transpose();
    }
    CHECK((x.transpose() * (y - fitted)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("random perturbations never lower the training objective")
{
    const auto samples = affine_samples(kA, kB, 10, 10, 0.02, 4);
    const Ccm m = ccm_fit(samples);
    const double best = sum_squared_error(m, samples);
    Rng rng(5);
    for (int t = 0; t < 100; ++t) {
        Ccm p = m;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                p.a(i, j) += 1e-3 * (2.0 * rng.uniform() - 1.0);
            }
            p.b(i) += 1e-3 * (2.0 * rng.uniform() - 1.0);
        }
        CHECK(sum_squared_error(p, samples) >= best);
    }
}

TEST_CASE("ill-conditioned but full-rank data goes through the QR path")
{
    // Sources spread over 1e-5 around a point: XtX condition number >> 1e8.
    Rng rng(6);
    std::vector<PairedSample> samples;
    for (int i = 0; i < 50; ++i) {
        const LinearRgb src{0.5 + 1e-5 * rng.uniform(), 0.4 + 1e-5 * rng.uniform(),
                            0.3 + 1e-5 * rng.uniform()};
        const Eigen::Vector3d ref = kA * v(src) + kB;
        samples.push_back({src, {ref(0), ref(1), ref(2)}, {"S", "r", i}});
    }
    const Ccm m = ccm_fit(samples);
    CHECK((m.a - kA).cwiseAbs().maxCoeff() < 1e-4);
    CHECK((m.b - kB).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("rank-deficient designs are rejected with the rank")
{
    std::vector<PairedSample> samples;
    for (int i = 0; i < 10; ++i) {
        const double t = 0.1 * i;
        samples.push_back({{t, t, t}, {t, t, t}, {"S", "r", i}}); // rank 2 with the intercept
    }
    try {
        ccm_fit(samples);
        FAIL("expected SingularFitError");
    } catch (const SingularFitError& e) {
        CHECK(e.rank() == 2);
    }
    CHECK_THROWS_AS(ccm_fit(std::span(samples).first(3)), InsufficientDataError);
}

TEST_CASE("near-singular solutions carry a warning")
{
    // Reference depends on red only, so the fitted matrix has rank 1.
    Rng rng(8);
    std::vector<PairedSample> samples;
    for (int i = 0; i < 40; ++i) {
        const auto src = random_rgb(rng);
        samples.push_back({src, {src.r, src.r, src.r}, {"S", "r", i}});
    }
    const Ccm m = ccm_fit(samples);
    REQUIRE(m.warnings.size() == 1);
    CHECK(m.warnings[0].find("near-singular") != std::string::npos);
}

TEST_CASE("ccm_apply clips negative output")
{
    Ccm m;
    m.b = Eigen::Vector3d(-0.5, 0.0, 0.1);
    const auto out = ccm_apply(m, {0.2, 0.3, 0.4});
    CHECK(out.r == 0.0);
    CHECK_THAT(out.g, WithinAbs(0.3, 1e-15));
    CHECK_THAT(out.b, WithinAbs(0.5, 1e-15));
}

TEST_CASE("subject folds keep every subject in one fold and balance sizes")
{
    const auto samples = affine_samples(kA, kB, 23, 4, 0.0, 9);
    const auto folds = assign_subject_folds(samples, 5, 42);
    REQUIRE(folds.size() == 23);
    std::map<int, int> sizes;
    for (const auto& [s, f] : folds) {
        ++sizes[f];
    }
    REQUIRE(sizes.size() == 5);
    for (const auto& [f, n] : sizes) {
        CHECK((n == 4 || n == 5));
    }
    CHECK(folds == assign_subject_folds(samples, 5, 42));
    CHECK(folds != assign_subject_folds(samples, 5, 43));

    CHECK_THROWS_AS(assign_subject_folds(samples, 1, 42), ValidationError);
    CHECK_THROWS_AS(assign_subject_folds(samples, 24, 42), InfeasibleError);
}

TEST_CASE("fold assignment does not depend on sample order")
{
    auto samples = affine_samples(kA, kB, 12, 3, 0.0, 10);
    const auto a = assign_subject_folds(samples, 4, 1);
    std::reverse(samples.begin(), samples.end());
    CHECK(a == assign_subject_folds(samples, 4, 1));
}

TEST_CASE("cross-validation is grouped, out-of-fold and deterministic")
{
    const auto samples = affine_samples(kA, kB, 20, 6, 0.005, 11);
    const auto r1 = crossval_ccm(samples, 5, 7);
    const auto r2 = crossval_ccm(samples, 5, 7);
    CHECK(r1.before == r2.before);
    CHECK(r1.after == r2.after);
    CHECK(r1.fold_of_sample == r2.fold_of_sample);
    CHECK(r1.improvement_pct == r2.improvement_pct);

    REQUIRE(r1.folds.size() == 5);
    std::size_t tested = 0;
    for (const auto& f : r1.folds) {
        tested += f.n_test;
        CHECK(f.n_train + f.n_test == samples.size());
    }
    CHECK(tested == samples.size());

    std::map<std::string, std::set<int>> subject_folds;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        subject_folds[samples[i].key.subject].insert(r1.fold_of_sample[i]);
    }
    for (const auto& [s, f] : subject_folds) {
        CHECK(f.size() == 1);
    }

    // Held-out predictions equal a refit on the other folds.
    std::vector<PairedSample> train;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (r1.fold_of_sample[i] != 0) {
            train.push_back(samples[i]);
        }
    }
    const Ccm m0 = ccm_fit(train);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (r1.fold_of_sample[i] == 0) {
            CHECK(r1.corrected[i] == ccm_apply(m0, samples[i].src));
        }
    }
    CHECK(r1.after_mean < r1.before_mean);
    CHECK_THAT(r1.improvement_pct,
               WithinAbs(100.0 * (1.0 - r1.after_mean / r1.before_mean), 1e-12));
}

TEST_CASE("cross-validation input checks")
{
    const auto samples = affine_samples(kA, kB, 4, 2, 0.0, 12);
    CHECK_THROWS_AS(crossval_ccm(samples, 1, 0), ValidationError);
    CHECK_THROWS_AS(crossval_ccm(samples, 5, 0), InsufficientDataError);
    const auto few_subjects = affine_samples(kA, kB, 3, 10, 0.0, 13);
    CHECK_THROWS_AS(crossval_ccm(few_subjects, 5, 0), InfeasibleError);
}

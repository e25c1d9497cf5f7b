// Acceptance run: one PASS/FAIL line per criterion with its runtime.
// Exit status is nonzero if any criterion fails.

#include "dermacal/calibration.hpp"
#include "dermacal/cli.hpp"
#include "dermacal/clinical.hpp"
#include "dermacal/colorspace.hpp"
#include "dermacal/patch_csv.hpp"
#include "dermacal/pipeline.hpp"
#include "dermacal/rng.hpp"
#include "dermacal/simulate.hpp"
#include "dermacal/stats.hpp"
#include "sharma_pairs.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace dermacal;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
};

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

/// Default simulator cohort (200 subjects, seed 42), exported to CSV and read
/// back the way the CLI would see it.
std::vector<PatchRecord> default_cohort()
{
    const auto cfg = simulate::default_config();
    const auto cohort = simulate::generate_cohort(cfg.cohort, cfg.devices);
    return patch_csv::parse(patch_csv::format({cohort.records, RgbEncoding::EightBit})).records;
}

ReliabilityReport analyse(std::set<Analysis> analyses)
{
    RunConfig cfg;
    cfg.inputs = {"cohort.csv"};
    cfg.analyses = std::move(analyses);
    return pipeline::run_analysis(cfg, default_cohort());
}

const DevicePairDeltaE* find_pair(const ReliabilityReport& r, const std::string& second)
{
    for (const auto& p : *r.deltae) {
        if (p.first == "dslr" && p.second == second) {
            return &p;
        }
    }
    return nullptr;
}

Outcome color_math()
{
    Outcome o;
    double worst = 0.0;
    Rng rng(1);
    for (int i = 0; i < 100000; ++i) {
        const SrgbColor c{rng.uniform(), rng.uniform(), rng.uniform()};
        const auto back = colorspace::srgb_encode(colorspace::srgb_decode(c));
        worst = std::max({worst, std::abs(back.r - c.r), std::abs(back.g - c.g),
                          std::abs(back.b - c.b)});
    }
    o.require(worst <= 1e-9, "sRGB roundtrip " + fmt("%.3g", worst));

    const auto white = colorspace::srgb_to_lab({1, 1, 1});
    o.require(std::abs(white.l - 100) <= 0.01 && std::abs(white.a) <= 0.01 &&
                  std::abs(white.b) <= 0.01,
              "D65 white off");

    double de_worst = 0.0;
    for (const auto& p : kSharmaPairs) {
        de_worst = std::max(de_worst, std::abs(colorspace::ciede2000(p.x, p.y) - p.de));
    }
    o.require(de_worst <= 1e-4, "CIEDE2000 deviation " + fmt("%.3g", de_worst));
    o.detail = o.pass ? "roundtrip " + fmt("%.2g", worst) + ", 34 pairs within " +
                            fmt("%.2g", de_worst)
                      : o.detail;
    return o;
}

Outcome ccm_correctness()
{
    Outcome o;
    const Eigen::Matrix3d a = (Eigen::Matrix3d() << 1.10, 0.05, -0.02, -0.03, 0.95, 0.04, 0.01,
                               -0.06, 1.20)
                                  .finished();
    const Eigen::Vector3d b(0.02, -0.01, 0.03);
    Rng rng(2);
    std::vector<PairedSample> affine, self, noisy;
    for (int i = 0; i < 200; ++i) {
        const LinearRgb src{0.05 + 0.9 * rng.uniform(), 0.05 + 0.9 * rng.uniform(),
                            0.05 + 0.9 * rng.uniform()};
        const Eigen::Vector3d ref = a * Eigen::Vector3d(src.r, src.g, src.b) + b;
        const PairKey key{"S" + std::to_string(i % 20), "chin", i};
        affine.push_back({src, {ref(0), ref(1), ref(2)}, key});
        self.push_back({src, src, key});
        noisy.push_back({src,
                         {ref(0) + 0.02 * rng.normal(), ref(1) + 0.02 * rng.normal(),
                          ref(2) + 0.02 * rng.normal()},
                         key});
    }
    const Ccm m = calibration::ccm_fit(affine);
    const double err = std::max((m.a - a).cwiseAbs().maxCoeff(), (m.b - b).cwiseAbs().maxCoeff());
    o.require(err <= 1e-9, "affine recovery " + fmt("%.3g", err));
    const Ccm id = calibration::ccm_fit(self);
    const double id_err = std::max((id.a - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(),
                                   id.b.cwiseAbs().maxCoeff());
    o.require(id_err <= 1e-9, "self-fit " + fmt("%.3g", id_err));

    const Ccm fit = calibration::ccm_fit(noisy);
    const double best = calibration::sum_squared_error(fit, noisy);
    int lowered = 0;
    for (int t = 0; t < 100; ++t) {
        Ccm p = fit;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                p.a(i, j) += 1e-3 * (2 * rng.uniform() - 1);
            }
            p.b(i) += 1e-3 * (2 * rng.uniform() - 1);
        }
        lowered += calibration::sum_squared_error(p, noisy) < best;
    }
    o.require(lowered == 0, std::to_string(lowered) + " perturbations lowered SSE");
    if (o.pass) {
        o.detail = "recovery " + fmt("%.2g", err) + ", identity " + fmt("%.2g", id_err) +
                   ", 0/100 perturbations lower SSE";
    }
    return o;
}

Outcome clinical_oracles()
{
    Outcome o;
    const double mi = clinical::melanin_index({50, 0, 0});
    const double ita = clinical::ita({75, 0, 15});
    const auto s = clinical::ita_sensitivity({75, 0, 15});
    o.require(std::abs(mi - 30.103) < 5e-4, "MI(50) " + fmt("%.6f", mi));
    o.require(std::abs(ita - 59.036) < 5e-4, "ITA(75,15) " + fmt("%.6f", ita));
    o.require(std::abs(s.d_ita_d_b_rad - (-25.0 / 850.0)) <= 1e-4 &&
                  std::abs(s.d_ita_d_b_rad - (-0.0294)) <= 1e-4,
              "dITA/db " + fmt("%.6f", s.d_ita_d_b_rad));

    Rng rng(3);
    const double h = 1e-5;
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const LabColor c{20 + 75 * rng.uniform(), 0, 2 + 38 * rng.uniform()};
        const auto g = clinical::ita_sensitivity(c);
        const double fl =
            (clinical::ita({c.l + h, 0, c.b}) - clinical::ita({c.l - h, 0, c.b})) / (2 * h);
        const double fb =
            (clinical::ita({c.l, 0, c.b + h}) - clinical::ita({c.l, 0, c.b - h})) / (2 * h);
        worst = std::max({worst, std::abs(fl - g.d_ita_d_l), std::abs(fb - g.d_ita_d_b)});
    }
    o.require(worst <= 1e-6, "finite differences " + fmt("%.3g", worst));
    if (o.pass) {
        o.detail = "MI " + fmt("%.3f", mi) + ", ITA " + fmt("%.3f", ita) + ", dITA/db* " +
                   fmt("%.4f", s.d_ita_d_b_rad) + " rad, FD worst " + fmt("%.2g", worst);
    }
    return o;
}

Outcome stats_oracles()
{
    Outcome o;
    Rng rng(4);
    double icc_worst = 0.0;
    double eta_worst = 0.0;
    const int tables = 25;
    for (int t = 0; t < tables; ++t) {
        // Ratings: n targets x k raters, by explicit sums of squares.
        const int n = 5 + static_cast<int>(rng.uniform() * 10);
        const int k = 2 + static_cast<int>(rng.uniform() * 3);
        Eigen::MatrixXd x(n, k);
        for (int i = 0; i < n; ++i) {
            const double target = 3 * rng.normal();
            for (int j = 0; j < k; ++j) {
                x(i, j) = target + 0.5 * j + rng.normal();
            }
        }
        double grand = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < k; ++j) {
                grand += x(i, j);
            }
        }
        grand /= n * k;
        double ssr = 0.0, ssc = 0.0, sst = 0.0;
        for (int i = 0; i < n; ++i) {
            double row = 0.0;
            for (int j = 0; j < k; ++j) {
                row += x(i, j);
            }
            ssr += k * std::pow(row / k - grand, 2);
        }
        for (int j = 0; j < k; ++j) {
            double col = 0.0;
            for (int i = 0; i < n; ++i) {
                col += x(i, j);
            }
            ssc += n * std::pow(col / n - grand, 2);
        }
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < k; ++j) {
                sst += std::pow(x(i, j) - grand, 2);
            }
        }
        const double msr = ssr / (n - 1);
        const double msc = ssc / (k - 1);
        const double mse = (sst - ssr - ssc) / ((n - 1.0) * (k - 1.0));
        const double cons = (msr - mse) / (msr + (k - 1) * mse);
        const double absl = (msr - mse) / (msr + (k - 1) * mse + k * (msc - mse) / n);
        const stats::RatingsTable table(x);
        icc_worst = std::max(
            {icc_worst, std::abs(stats::icc_3_1(table).icc - cons),
             std::abs(stats::icc_3_1(table, stats::IccForm::Absolute).icc - absl)});

        // One-way layout with 3 groups.
        std::vector<double> v;
        std::vector<std::string> labels;
        std::map<std::string, std::vector<double>> groups;
        for (int i = 0; i < 30; ++i) {
            const std::string g(1, static_cast<char>('a' + i % 3));
            const double y = (i % 3) * 0.7 + rng.normal();
            v.push_back(y);
            labels.push_back(g);
            groups[g].push_back(y);
        }
        double m = 0.0;
        for (double y : v) {
            m += y;
        }
        m /= static_cast<double>(v.size());
        double ssb = 0.0, sstot = 0.0;
        for (const auto& [g, ys] : groups) {
            double gm = 0.0;
            for (double y : ys) {
                gm += y;
            }
            gm /= static_cast<double>(ys.size());
            ssb += static_cast<double>(ys.size()) * (gm - m) * (gm - m);
        }
        for (double y : v) {
            sstot += (y - m) * (y - m);
        }
        eta_worst =
            std::max(eta_worst, std::abs(stats::anova_eta2(v, labels).eta_squared - ssb / sstot));
    }
    o.require(icc_worst <= 1e-10, "ICC deviation " + fmt("%.3g", icc_worst));
    o.require(eta_worst <= 1e-10, "eta^2 deviation " + fmt("%.3g", eta_worst));

    bool antisymmetric = true;
    for (int t = 0; t < 20; ++t) {
        std::vector<double> x, y;
        for (int i = 0; i < 15; ++i) {
            x.push_back(rng.normal());
            y.push_back(rng.normal());
        }
        const auto xy = stats::bland_altman(x, y);
        const auto yx = stats::bland_altman(y, x);
        antisymmetric = antisymmetric && xy.bias == -yx.bias && xy.sd == yx.sd &&
                        xy.loa_low == -yx.loa_high && xy.loa_high == -yx.loa_low;
    }
    o.require(antisymmetric, "Bland-Altman not antisymmetric");
    if (o.pass) {
        o.detail = std::to_string(tables) + " tables, ICC worst " + fmt("%.2g", icc_worst) +
                   ", eta^2 worst " + fmt("%.2g", eta_worst) + ", BA antisymmetric";
    }
    return o;
}

Outcome raw_unusability()
{
    Outcome o;
    const auto r = analyse({Analysis::DeltaE});
    const auto* tablet = find_pair(r, "tablet");
    const auto* phone = find_pair(r, "smartphone");
    if (!tablet || !phone) {
        o.require(false, "missing device pair");
        return o;
    }
    const double t = tablet->stats.mean;
    const double p = phone->stats.mean;
    o.require(t >= 6 && t <= 11, "tablet dE00 " + fmt("%.3f", t));
    o.require(p >= 5 && p <= 9.5, "smartphone dE00 " + fmt("%.3f", p));
    const double ft = tablet->stats.acceptable_fraction;
    const double fp = phone->stats.acceptable_fraction;
    o.require(ft < 0.05 && fp < 0.05, "fraction < 2: " + fmt("%.4f", ft) + ", " + fmt("%.4f", fp));
    if (o.pass) {
        o.detail = "dE00 tablet " + fmt("%.2f", t) + ", smartphone " + fmt("%.2f", p) +
                   ", below 2: " + fmt("%.2f%%", 100 * ft) + " / " + fmt("%.2f%%", 100 * fp);
    }
    return o;
}

Outcome calibration_efficacy()
{
    Outcome o;
    const auto r = analyse({Analysis::Ccm});
    std::string summary;
    for (const auto& c : *r.ccm) {
        const double imp = c.cv.improvement_pct;
        const double after = c.cv.after_mean;
        o.require(imp >= 55 && imp <= 85, c.device + " improvement " + fmt("%.1f%%", imp));
        o.require(after < 2.5, c.device + " corrected dE00 " + fmt("%.3f", after));
        summary += (summary.empty() ? "" : ", ") + c.device + " " + fmt("%.2f", c.cv.before_mean) +
                   " -> " + fmt("%.2f", after) + " (" + fmt("%.1f%%", imp) + ")";
    }
    o.require(r.ccm->size() == 2, "expected two consumer devices");
    if (o.pass) {
        o.detail = summary;
    }
    return o;
}

Outcome decoupling()
{
    Outcome o;
    const auto r = analyse({Analysis::Ccm, Analysis::Icc});
    std::map<std::string, double> icc;
    for (const auto& [name, res] : r.icc->measures) {
        icc[name] = res.icc;
    }
    o.require(r.icc->corrected, "ICC not on corrected data");
    o.require(icc["MI"] - icc["ITA"] >= 0.2, "ICC(MI) - ICC(ITA) " + fmt("%.3f", icc["MI"] - icc["ITA"]));
    o.require(icc["MI"] > 0.7, "ICC(MI) " + fmt("%.3f", icc["MI"]));
    o.require(icc["ITA"] < 0.55, "ICC(ITA) " + fmt("%.3f", icc["ITA"]));
    o.require(icc["b"] < icc["L"], "ICC(b) " + fmt("%.3f", icc["b"]) + " >= ICC(L) " +
                                       fmt("%.3f", icc["L"]));
    if (o.pass) {
        o.detail = "ICC MI " + fmt("%.3f", icc["MI"]) + ", ITA " + fmt("%.3f", icc["ITA"]) +
                   ", L* " + fmt("%.3f", icc["L"]) + ", b* " + fmt("%.3f", icc["b"]);
    }
    return o;
}

Outcome variance_hierarchy()
{
    Outcome o;
    const auto r = analyse({Analysis::Anova});
    std::map<std::string, double> eta;
    for (const auto& row : r.anova->rows) {
        eta[row.factor] = row.eta_squared;
    }
    o.require(eta.contains("region") && eta.contains("device"), "missing factor");
    o.require(eta["region"] > eta["device"], "region does not dominate device");
    o.require(eta["region"] >= 0.15 && eta["region"] <= 0.35,
              "eta^2 region " + fmt("%.3f", eta["region"]));
    o.require(eta["device"] >= 0.03 && eta["device"] <= 0.12,
              "eta^2 device " + fmt("%.3f", eta["device"]));
    if (o.pass) {
        o.detail = "eta^2 region " + fmt("%.3f", eta["region"]) + ", device " +
                   fmt("%.3f", eta["device"]);
    }
    return o;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome determinism()
{
    Outcome o;
    const auto root = fs::temp_directory_path() / "dermacal_acceptance";
    fs::remove_all(root);
    std::ostringstream sink;
    const auto data = (root / "data").string();
    o.require(cli::run({"simulate", "--out-dir", data}, sink, sink) == cli::kOk, "simulate failed");
    std::vector<std::string> outputs;
    // Identical config, out_dir included since the report echoes it.
    const auto dir = (root / "out").string();
    for (const char* run : {"run 1", "run 2"}) {
        fs::remove(fs::path(dir) / "report.json");
        const int code = cli::run({"report", "--input", data + "/cohort.csv", "--out-dir", dir,
                                   "--format", "json"},
                                  sink, sink);
        o.require(code == cli::kOk, std::string(run) + " exited " + std::to_string(code));
        outputs.push_back(slurp(fs::path(dir) / "report.json"));
    }
    o.require(!outputs[0].empty(), "empty report.json");
    o.require(outputs[0] == outputs[1], "report.json differs between runs");
    if (o.pass) {
        o.detail = "report.json identical (" + std::to_string(outputs[0].size()) + " bytes)";
    }
    fs::remove_all(root);
    return o;
}

struct Criterion {
    int id;
    double budget_s;
    std::function<Outcome()> check;
};

} // namespace

int main()
{
    const std::vector<Criterion> criteria{
        {1, 1.0, color_math},       {2, 5.0, ccm_correctness},     {3, 5.0, clinical_oracles},
        {4, 5.0, stats_oracles},    {5, 60.0, raw_unusability},    {6, 120.0, calibration_efficacy},
        {7, 120.0, decoupling},     {8, 60.0, variance_hierarchy}, {9, 240.0, determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (s >= c.budget_s) {
            o.pass = false;
            o.detail += (o.detail.empty() ? "" : "; ") + fmt("over the %.0f s budget", c.budget_s);
        }
        failed += !o.pass;
        std::printf("criterion %d: %s (%.3f s) %s\n", c.id, o.pass ? "PASS" : "FAIL", s,
                    o.detail.c_str());
    }
    return failed == 0 ? 0 : 1;
}

#include "dermacal/report.hpp"

#include <cstdio>
#include <sstream>

namespace dermacal::report {

using nlohmann::json;

namespace {

json skipped() { return {{"status", "skipped"}}; }

json lab_json(const LabColor& c) { return {{"l", c.l}, {"a", c.a}, {"b", c.b}}; }

json stats_json(const DeltaEStats& s)
{
    return {{"n", s.n},           {"mean", s.mean}, {"sd", s.sd},
            {"median", s.median}, {"p95", s.p95},   {"acceptable_fraction", s.acceptable_fraction}};
}

json cv_json(const CvReport& cv)
{
    json folds = json::array();
    for (const auto& f : cv.folds) {
        folds.push_back({{"fold", f.fold},
                         {"test_subjects", f.test_subjects},
                         {"n_train", f.n_train},
                         {"n_test", f.n_test},
                         {"train_mean", f.train_mean},
                         {"train_sd", f.train_sd},
                         {"test_mean", f.test_mean},
                         {"test_sd", f.test_sd}});
    }
    return {{"fold_count", cv.fold_count},   {"seed", cv.seed},
            {"folds", folds},                {"before_mean", cv.before_mean},
            {"before_sd", cv.before_sd},     {"after_mean", cv.after_mean},
            {"after_sd", cv.after_sd},       {"improvement_pct", cv.improvement_pct}};
}

json icc_json(const stats::IccResult& r)
{
    return {{"icc", r.icc},
            {"ci_low", r.ci_low},
            {"ci_high", r.ci_high},
            {"form", std::string(stats::to_string(r.form))},
            {"interpretation", r.interpretation},
            {"targets", r.targets},
            {"raters", r.raters}};
}

json anova_row_json(const stats::AnovaRow& r)
{
    return {{"factor", r.factor},
            {"groups", r.groups},
            {"observations", r.observations},
            {"ss_between", r.ss_between},
            {"ss_within", r.ss_within},
            {"df_between", r.df_between},
            {"df_within", r.df_within},
            {"f_statistic", r.f_statistic},
            {"p_value", r.p_value},
            {"eta_squared", r.eta_squared},
            {"effect_size", r.effect_size}};
}

std::string f3(double v)
{
    if (!std::isfinite(v)) {
        return v > 0 ? "inf" : (v < 0 ? "-inf" : "n/a");
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    std::string s(buf);
    return s == "-0.000" ? "0.000" : s;
}

std::string pct(double fraction) { return f3(100.0 * fraction) + "%"; }

} // namespace

json to_json(const RunConfig& cfg)
{
    json analyses = json::array();
    for (auto a : kAllAnalyses) {
        if (cfg.enabled(a)) {
            analyses.push_back(std::string(to_string(a)));
        }
    }
    return {{"inputs", cfg.inputs},
            {"reference_device", cfg.reference_device},
            {"folds", cfg.folds},
            {"seed", cfg.seed},
            {"threshold", cfg.threshold},
            {"analyses", analyses},
            {"out_dir", cfg.out_dir},
            {"format", cfg.format},
            {"icc_form", std::string(stats::to_string(cfg.icc_form))}};
}

json to_json(const Ccm& m)
{
    json a = json::array();
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            a.push_back(m.a(i, j));
        }
    }
    return {{"a", a}, {"b", {m.b(0), m.b(1), m.b(2)}}, {"space", m.space}, {"warnings", m.warnings}};
}

json to_json(const ReliabilityReport& r)
{
    json doc;
    doc["report_version"] = kReportVersion;
    doc["tool_version"] = std::string(kToolVersion);
    doc["seed"] = r.config.seed;
    doc["config"] = to_json(r.config);

    json devices = json::array();
    for (const auto& d : r.dataset.devices) {
        devices.push_back({{"device", d.device},
                           {"reference", d.reference},
                           {"records", d.records},
                           {"subjects", d.subjects},
                           {"mean_lab", lab_json(d.mean_lab)},
                           {"mean_rgb", d.mean_rgb}});
    }
    json regions = json::object();
    for (const auto& [name, n] : r.dataset.regions) {
        regions[name] = n;
    }
    doc["dataset"] = {{"records", r.dataset.records},
                      {"subjects", r.dataset.subjects},
                      {"devices", devices},
                      {"regions", regions}};

    if (r.deltae) {
        json pairs = json::array();
        for (const auto& p : *r.deltae) {
            pairs.push_back({{"first", p.first},
                             {"second", p.second},
                             {"unmatched", p.unmatched},
                             {"stats", stats_json(p.stats)}});
        }
        doc["deltae"] = {{"status", "ok"}, {"threshold", r.config.threshold}, {"pairs", pairs}};
    } else {
        doc["deltae"] = skipped();
    }

    if (r.ccm) {
        json devs = json::array();
        for (const auto& c : *r.ccm) {
            devs.push_back({{"device", c.device},
                            {"ccm", to_json(c.ccm)},
                            {"crossval", cv_json(c.cv)},
                            {"before", stats_json(c.before)},
                            {"after", stats_json(c.after)}});
        }
        doc["ccm"] = {{"status", "ok"}, {"devices", devs}};
    } else {
        doc["ccm"] = skipped();
    }

    if (r.indices) {
        json devs = json::array();
        for (const auto& s : *r.indices) {
            devs.push_back({{"device", s.device},
                            {"n", s.n},
                            {"melanin_index", s.melanin_index},
                            {"erythema_index", s.erythema_index},
                            {"ita_degrees", s.ita_degrees},
                            {"ita_degenerate", s.ita_degenerate}});
        }
        doc["indices"] = {{"status", "ok"}, {"devices", devs}};
    } else {
        doc["indices"] = skipped();
    }

    if (r.icc) {
        json measures = json::object();
        for (const auto& [name, res] : r.icc->measures) {
            measures[name] = icc_json(res);
        }
        doc["icc"] = {{"status", "ok"},
                      {"raters", r.icc->raters},
                      {"corrected", r.icc->corrected},
                      {"complete_cells", r.icc->complete_cells},
                      {"incomplete_cells", r.icc->incomplete_cells},
                      {"measures", measures}};
    } else {
        doc["icc"] = skipped();
    }

    if (r.bland_altman) {
        json entries = json::array();
        for (const auto& e : *r.bland_altman) {
            entries.push_back({{"device", e.device},
                               {"measure", e.measure},
                               {"bias", e.result.bias},
                               {"sd", e.result.sd},
                               {"loa_low", e.result.loa_low},
                               {"loa_high", e.result.loa_high},
                               {"differences", e.result.differences},
                               {"means", e.result.means}});
        }
        doc["bland_altman"] = {{"status", "ok"}, {"entries", entries}};
    } else {
        doc["bland_altman"] = skipped();
    }

    if (r.anova) {
        json rows = json::array();
        for (std::size_t i = 0; i < r.anova->rows.size(); ++i) {
            json row = anova_row_json(r.anova->rows[i]);
            row["p_bonferroni"] = r.anova->bonferroni[i].adjusted;
            row["significant"] = r.anova->bonferroni[i].significant;
            rows.push_back(row);
        }
        doc["anova"] = {{"status", "ok"},
                        {"response", r.anova->response},
                        {"alpha", r.anova->alpha},
                        {"rows", rows},
                        {"note", "one-way per factor; eta squared is not additive across factors"}};
    } else {
        doc["anova"] = skipped();
    }

    if (r.sensitivity) {
        const auto& s = *r.sensitivity;
        json devs = json::array();
        for (const auto& d : s.devices) {
            devs.push_back({{"device", d.device},
                            {"cells", d.cells},
                            {"sd_delta_l", d.sd_delta_l},
                            {"sd_delta_b", d.sd_delta_b},
                            {"predicted_ita_sd", d.predicted_ita_sd},
                            {"observed_ita_sd", d.observed_ita_sd}});
        }
        doc["sensitivity"] = {{"status", "ok"},
                              {"at", lab_json(s.at)},
                              {"d_ita_d_l_rad", s.partials.d_ita_d_l_rad},
                              {"d_ita_d_b_rad", s.partials.d_ita_d_b_rad},
                              {"d_ita_d_l_deg", s.partials.d_ita_d_l},
                              {"d_ita_d_b_deg", s.partials.d_ita_d_b},
                              {"devices", devs}};
    } else {
        doc["sensitivity"] = skipped();
    }
    return doc;
}

std::string emit_json(const json& doc) { return doc.dump(2) + "\n"; }

std::string emit(const ReliabilityReport& r, Format format)
{
    if (format == Format::Json) {
        return emit_json(to_json(r));
    }

    std::ostringstream md;
    md << "# Reliability report\n\n";
    md << "Tool version " << kToolVersion << ", report version " << kReportVersion
       << ", seed " << r.config.seed << ", reference device `" << r.config.reference_device
       << "`.\n\n";

    md << "## Dataset\n\n";
    md << r.dataset.records << " records, " << r.dataset.subjects << " subjects.\n\n";
    md << "| Device | Records | Mean L* | Mean a* | Mean b* | Mean R | Mean G | Mean B |\n";
    md << "|---|---|---|---|---|---|---|---|\n";
    for (const auto& d : r.dataset.devices) {
        md << "| " << d.device << (d.reference ? " (reference)" : "") << " | " << d.records
           << " | " << f3(d.mean_lab.l) << " | " << f3(d.mean_lab.a) << " | " << f3(d.mean_lab.b)
           << " | " << f3(d.mean_rgb[0]) << " | " << f3(d.mean_rgb[1]) << " | "
           << f3(d.mean_rgb[2]) << " |\n";
    }
    md << "\n";

    md << "## Color difference (dE00)\n\n";
    if (r.deltae) {
        md << "| Pair | n | Mean | SD | Median | 95th pct | dE00 < " << f3(r.config.threshold)
           << " |\n|---|---|---|---|---|---|---|\n";
        for (const auto& p : *r.deltae) {
            md << "| " << p.first << " vs " << p.second << " | " << p.stats.n << " | "
               << f3(p.stats.mean) << " | " << f3(p.stats.sd) << " | " << f3(p.stats.median)
               << " | " << f3(p.stats.p95) << " | " << pct(p.stats.acceptable_fraction) << " |\n";
        }
    } else {
        md << "Skipped.\n";
    }
    md << "\n";

    md << "## Calibration (" << r.config.folds << "-fold cross-validated CCM)\n\n";
    if (r.ccm) {
        md << "| Device | Before | After | Improvement | After < " << f3(r.config.threshold)
           << " |\n|---|---|---|---|---|\n";
        for (const auto& c : *r.ccm) {
            md << "| " << c.device << " | " << f3(c.cv.before_mean) << " +/- "
               << f3(c.cv.before_sd) << " | " << f3(c.cv.after_mean) << " +/- "
               << f3(c.cv.after_sd) << " | " << f3(c.cv.improvement_pct) << "% | "
               << pct(c.after.acceptable_fraction) << " |\n";
        }
    } else {
        md << "Skipped.\n";
    }
    md << "\n";

    md << "## Clinical indices\n\n";
    if (r.indices) {
        md << "| Device | n | MI | EI | ITA (deg) | Degenerate ITA |\n|---|---|---|---|---|---|\n";
        for (const auto& s : *r.indices) {
            md << "| " << s.device << " | " << s.n << " | " << f3(s.melanin_index) << " | "
               << f3(s.erythema_index) << " | " << f3(s.ita_degrees) << " | " << s.ita_degenerate
               << " |\n";
        }
    } else {
        md << "Skipped.\n";
    }
    md << "\n";

    md << "## Inter-device reliability (ICC)\n\n";
    if (r.icc) {
        md << "Raters: ";
        for (std::size_t i = 0; i < r.icc->raters.size(); ++i) {
            md << (i ? ", " : "") << r.icc->raters[i];
        }
        md << (r.icc->corrected ? " (consumer devices after out-of-fold correction)" : "")
           << ". " << r.icc->complete_cells << " complete cells, " << r.icc->incomplete_cells
           << " incomplete cells dropped.\n\n";
        md << "| Measure | ICC | 95% CI | Interpretation |\n|---|---|---|---|\n";
        for (const auto& [name, res] : r.icc->measures) {
            md << "| " << name << " | " << f3(res.icc) << " | " << f3(res.ci_low) << " to "
               << f3(res.ci_high) << " | " << res.interpretation << " |\n";
        }
        if (!r.icc->measures.empty()) {
            md << "\nForm: " << stats::to_string(r.icc->measures.front().second.form) << ".\n";
        }
    } else {
        md << "Skipped.\n";
    }
    md << "\n";

    md << "## Bland-Altman (device minus reference)\n\n";
    if (r.bland_altman) {
        md << "| Device | Measure | Bias | SD | Lower LoA | Upper LoA |\n|---|---|---|---|---|---|\n";
        for (const auto& e : *r.bland_altman) {
            md << "| " << e.device << " | " << e.measure << " | " << f3(e.result.bias) << " | "
               << f3(e.result.sd) << " | " << f3(e.result.loa_low) << " | "
               << f3(e.result.loa_high) << " |\n";
        }
    } else {
        md << "Skipped.\n";
    }
    md << "\n";

    md << "## Variance decomposition (one-way ANOVA)\n\n";
    if (r.anova) {
        md << "Response: " << r.anova->response << ". eta squared is not additive across factors.\n\n";
        md << "| Factor | F | p | p (Bonferroni) | eta^2 | Effect size |\n|---|---|---|---|---|---|\n";
        for (std::size_t i = 0; i < r.anova->rows.size(); ++i) {
            const auto& row = r.anova->rows[i];
            md << "| " << row.factor << " | " << f3(row.f_statistic) << " | " << f3(row.p_value)
               << " | " << f3(r.anova->bonferroni[i].adjusted) << " | " << f3(row.eta_squared)
               << " | " << row.effect_size << " |\n";
        }
    } else {
        md << "Skipped.\n";
    }
    md << "\n";

    md << "## ITA sensitivity\n\n";
    if (r.sensitivity) {
        const auto& s = *r.sensitivity;
        md << "At L* " << f3(s.at.l) << ", b* " << f3(s.at.b) << ": dITA/dL* = "
           << f3(s.partials.d_ita_d_l) << " deg/unit, dITA/db* = " << f3(s.partials.d_ita_d_b)
           << " deg/unit.\n\n";
        md << "| Device | SD dL* | SD db* | Predicted ITA SD | Observed ITA SD |\n|---|---|---|---|---|\n";
        for (const auto& d : s.devices) {
            md << "| " << d.device << " | " << f3(d.sd_delta_l) << " | " << f3(d.sd_delta_b)
               << " | " << f3(d.predicted_ita_sd) << " | " << f3(d.observed_ita_sd) << " |\n";
        }
    } else {
        md << "Skipped.\n";
    }
    return md.str();
}

} // namespace dermacal::report

#include "dermacal/cli.hpp"

#include "dermacal/error.hpp"
#include "dermacal/format.hpp"
#include "dermacal/patch_csv.hpp"
#include "dermacal/pipeline.hpp"
#include "dermacal/report.hpp"
#include "dermacal/run_config.hpp"
#include "dermacal/sim_config.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace dermacal::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Long-form flags shared by the analysis subcommands. Explicit flags win over
// the DERMACAL_CONFIG file, which wins over built-in defaults.
struct RunFlags {
    std::vector<std::string> inputs;
    std::string reference;
    int folds = 0;
    std::uint64_t seed = 0;
    double threshold = 0.0;
    std::string analyses;
    std::string out_dir;
    std::string format;
    std::string icc_form;
    std::string config;
    std::vector<CLI::Option*> opts;

    void add(CLI::App& app, bool analysis_flags)
    {
        opts.push_back(app.add_option("--input", inputs, "Patch CSV file(s)"));
        opts.push_back(app.add_option("--reference-device", reference, "Reference device label"));
        opts.push_back(app.add_option("--folds", folds, "Cross-validation folds"));
        opts.push_back(app.add_option("--seed", seed, "Random seed"));
        opts.push_back(app.add_option("--threshold", threshold, "Clinical dE00 threshold"));
        opts.push_back(app.add_option("--icc-form", icc_form, "consistency or absolute"));
        if (analysis_flags) {
            opts.push_back(app.add_option("--analyses", analyses,
                                          "Comma-separated analyses, 'all' or 'none'"));
            opts.push_back(app.add_option("--out-dir", out_dir, "Output directory"));
            opts.push_back(app.add_option("--format", format, "json, markdown or both"));
        }
        app.add_option("--config", config, "Run config file (overrides DERMACAL_CONFIG)");
    }

    bool given(const char* name) const
    {
        for (const auto* o : opts) {
            if (o->get_name() == name) {
                return o->count() > 0;
            }
        }
        return false;
    }

    RunConfig resolve() const
    {
        RunConfig cfg;
        std::string path = config;
        if (path.empty()) {
            if (const char* env = std::getenv(std::string(run_config::kEnvVar).c_str())) {
                path = env;
            }
        }
        if (!path.empty()) {
            cfg = run_config::load(path, cfg);
        }
        if (given("--input")) {
            cfg.inputs = inputs;
        }
        if (given("--reference-device")) {
            cfg.reference_device = reference;
        }
        if (given("--folds")) {
            cfg.folds = folds;
        }
        if (given("--seed")) {
            cfg.seed = seed;
        }
        if (given("--threshold")) {
            cfg.threshold = threshold;
        }
        if (given("--analyses")) {
            cfg.analyses = run_config::parse_analyses(analyses);
        }
        if (given("--out-dir")) {
            cfg.out_dir = out_dir;
        }
        if (given("--format")) {
            cfg.format = format;
        }
        if (given("--icc-form")) {
            cfg.icc_form = run_config::parse_icc_form(icc_form);
        }
        cfg.validate();
        if (cfg.inputs.empty()) {
            throw ValidationError("no input given (use --input or the config file)");
        }
        return cfg;
    }
};

void write_output(const std::string& path, const std::string& content, std::ostream& out)
{
    if (path.empty() || path == "-") {
        out << content;
    } else {
        patch_csv::write_file(path, content);
    }
}

void ensure_dir(const std::string& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw IoError("cannot create output directory '" + dir + "'");
    }
}

ReliabilityReport analyse(RunConfig cfg, std::set<Analysis> analyses)
{
    cfg.analyses = std::move(analyses);
    const auto table = patch_csv::ingest_all(cfg.inputs);
    return pipeline::run_analysis(cfg, table.records);
}

void print_section(const ReliabilityReport& r, const char* name, std::ostream& out)
{
    out << report::emit_json(report::to_json(r).at(name));
}

Ccm read_ccm(const std::string& path, const std::string& device)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open CCM file '" + path + "'");
    }
    json doc;
    try {
        doc = json::parse(in);
        if (!doc.contains("a")) {
            // Keyed by device, as written by `ccm fit`.
            if (!doc.is_object() || !doc.contains(device)) {
                throw ValidationError(path + ": no CCM for device '" + device + "'");
            }
            doc = doc.at(device);
        }
        const auto a = doc.at("a").get<std::vector<double>>();
        const auto b = doc.at("b").get<std::vector<double>>();
        if (a.size() != 9 || b.size() != 3) {
            throw ValidationError(path + ": ccm.a needs 9 numbers and ccm.b 3");
        }
        if (doc.value("space", std::string("linear_rgb")) != "linear_rgb") {
            throw ValidationError(path + ": unsupported ccm.space '" +
                                  doc.at("space").get<std::string>() + "'");
        }
        Ccm m;
        m.a << a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7], a[8];
        m.b << b[0], b[1], b[2];
        return m;
    } catch (const json::exception& e) {
        throw ValidationError(path + ": malformed CCM document: " + e.what());
    }
}

int exit_code_for(const std::exception& e)
{
    if (dynamic_cast<const IoError*>(&e)) {
        return kIo;
    }
    if (dynamic_cast<const InfeasibleError*>(&e) || dynamic_cast<const InsufficientDataError*>(&e) ||
        dynamic_cast<const SingularFitError*>(&e)) {
        return kInfeasible;
    }
    return kValidation;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"dermacal: device colour calibration and inter-device reliability for skin patches",
                 "dermacal"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    // convert
    RunFlags convert_flags;
    std::string convert_out;
    auto* convert = app.add_subcommand("convert", "Per-record sRGB to CIELAB conversion (CSV)");
    convert_flags.add(*convert, false);
    convert->add_option("--output", convert_out, "Output file (default stdout)");

    RunFlags deltae_flags;
    auto* deltae = app.add_subcommand("deltae", "dE00 tables for every device pair (JSON)");
    deltae_flags.add(*deltae, false);

    // ccm fit | apply | crossval
    auto* ccm = app.add_subcommand("ccm", "Colour correction matrices");
    ccm->require_subcommand(1);
    RunFlags fit_flags;
    std::string fit_out;
    auto* fit = ccm->add_subcommand("fit", "Fit one CCM per consumer device on all pairs (JSON)");
    fit_flags.add(*fit, false);
    fit->add_option("--output", fit_out, "Output file (default stdout)");

    RunFlags apply_flags;
    std::string apply_ccm;
    std::string apply_device;
    std::string apply_out;
    auto* apply = ccm->add_subcommand("apply", "Correct one device's records (CSV)");
    apply_flags.add(*apply, false);
    apply->add_option("--ccm", apply_ccm, "CCM JSON file")->required();
    apply->add_option("--device", apply_device, "Device whose records are corrected")->required();
    apply->add_option("--output", apply_out, "Output file (default stdout)");

    RunFlags cv_flags;
    auto* crossval = ccm->add_subcommand("crossval", "Subject-grouped k-fold CCM evaluation (JSON)");
    cv_flags.add(*crossval, false);

    RunFlags indices_flags;
    std::string indices_out;
    auto* indices = app.add_subcommand("indices", "Per-record MI, EI and ITA (CSV)");
    indices_flags.add(*indices, false);
    indices->add_option("--output", indices_out, "Output file (default stdout)");

    bool raw = false;
    RunFlags icc_flags;
    auto* icc = app.add_subcommand("icc", "Inter-device ICC per index and Lab channel (JSON)");
    icc_flags.add(*icc, false);
    icc->add_flag("--raw", raw, "Skip colour correction of consumer devices");

    RunFlags ba_flags;
    auto* ba = app.add_subcommand("bland-altman", "Bland-Altman agreement per Lab channel (JSON)");
    ba_flags.add(*ba, false);
    ba->add_flag("--raw", raw, "Skip colour correction of consumer devices");

    RunFlags anova_flags;
    auto* anova = app.add_subcommand("anova", "One-way ANOVA of raw dE00 by factor (JSON)");
    anova_flags.add(*anova, false);

    RunFlags sens_flags;
    std::optional<double> at_l;
    std::optional<double> at_b;
    auto* sens = app.add_subcommand("sensitivity", "ITA error propagation (JSON)");
    sens_flags.add(*sens, false);
    sens->add_flag("--raw", raw, "Skip colour correction of consumer devices");
    sens->add_option("--l", at_l, "Evaluate at this L* instead of a dataset");
    sens->add_option("--b", at_b, "Evaluate at this b* instead of a dataset");

    std::string sim_config_path;
    std::optional<std::uint64_t> sim_seed;
    std::optional<int> sim_subjects;
    std::string sim_out_dir = ".";
    bool dump_config = false;
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic multi-device cohort");
    simulate->add_option("--config", sim_config_path, "Simulator config file");
    simulate->add_option("--seed", sim_seed, "Override the cohort seed");
    simulate->add_option("--subjects", sim_subjects, "Override the subject count");
    simulate->add_option("--out-dir", sim_out_dir, "Writes cohort.csv and truth.csv here");
    simulate->add_flag("--dump-config", dump_config, "Print the effective config and exit");

    RunFlags report_flags;
    auto* full = app.add_subcommand("report", "Full pipeline: report.json, report.md, ccm_*.json");
    report_flags.add(*full, true);

    std::vector<const char*> argv{"dermacal"};
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }

    try {
        try {
            app.parse(static_cast<int>(argv.size()), argv.data());
        } catch (const CLI::CallForHelp&) {
            out << app.help();
            return kOk;
        } catch (const CLI::CallForAllHelp&) {
            out << app.help("", CLI::AppFormatMode::All);
            return kOk;
        } catch (const CLI::CallForVersion&) {
            out << kToolVersion << "\n";
            return kOk;
        } catch (const CLI::ParseError& e) {
            err << "error: " << e.what() << "\n";
            return kValidation;
        }

        if (*convert) {
            const auto cfg = convert_flags.resolve();
            const auto table = patch_csv::ingest_all(cfg.inputs);
            std::string csv = "subject_id,device,region,angle,l,a,b\n";
            for (const auto& r : table.records) {
                const auto lab = colorspace::srgb_to_lab(r.rgb);
                csv += r.subject_id + ',' + r.device + ',' + r.region + ',' +
                       std::to_string(r.angle) + ',' + shortest(lab.l) + ',' + shortest(lab.a) +
                       ',' + shortest(lab.b) + '\n';
            }
            write_output(convert_out, csv, out);
        } else if (*deltae) {
            print_section(analyse(deltae_flags.resolve(), {Analysis::DeltaE}), "deltae", out);
        } else if (*fit) {
            const auto cfg = fit_flags.resolve();
            const auto table = patch_csv::ingest_all(cfg.inputs);
            std::map<std::string, std::vector<PatchRecord>> by_device;
            for (const auto& r : table.records) {
                by_device[r.device].push_back(r);
            }
            if (!by_device.contains(cfg.reference_device)) {
                throw ValidationError("reference device '" + cfg.reference_device +
                                      "' not present in the input");
            }
            json doc = json::object();
            for (const auto& [device, recs] : by_device) {
                if (device == cfg.reference_device) {
                    continue;
                }
                const auto p = pipeline::pair_records(by_device.at(cfg.reference_device), recs);
                doc[device] = report::to_json(calibration::ccm_fit(p.samples));
            }
            if (doc.empty()) {
                throw InfeasibleError("no consumer device to calibrate");
            }
            write_output(fit_out, report::emit_json(doc), out);
        } else if (*apply) {
            const auto cfg = apply_flags.resolve();
            const Ccm m = read_ccm(apply_ccm, apply_device);
            auto table = patch_csv::ingest_all(cfg.inputs);
            std::size_t n = 0;
            for (auto& r : table.records) {
                if (r.device == apply_device) {
                    const auto lin = calibration::ccm_apply(m, colorspace::srgb_decode(r.rgb));
                    r.rgb = colorspace::srgb_encode(lin);
                    ++n;
                }
            }
            if (n == 0) {
                throw InfeasibleError("no records for device '" + apply_device + "'");
            }
            table.encoding = RgbEncoding::Unit;
            write_output(apply_out, patch_csv::format(table), out);
        } else if (*crossval) {
            print_section(analyse(cv_flags.resolve(), {Analysis::Ccm}), "ccm", out);
        } else if (*indices) {
            const auto cfg = indices_flags.resolve();
            const auto table = patch_csv::ingest_all(cfg.inputs);
            std::string csv = "subject_id,device,region,angle,mi,ei,ita,ita_degenerate\n";
            for (const auto& r : table.records) {
                const auto idx = clinical::indices(colorspace::srgb_to_lab(r.rgb));
                csv += r.subject_id + ',' + r.device + ',' + r.region + ',' +
                       std::to_string(r.angle) + ',' + shortest(idx.melanin_index) + ',' +
                       shortest(idx.erythema_index) + ',' + shortest(idx.ita_degrees) + ',' +
                       (idx.ita_degenerate ? "1" : "0") + '\n';
            }
            write_output(indices_out, csv, out);
        } else if (*icc) {
            std::set<Analysis> a{Analysis::Icc};
            if (!raw) {
                a.insert(Analysis::Ccm);
            }
            print_section(analyse(icc_flags.resolve(), a), "icc", out);
        } else if (*ba) {
            std::set<Analysis> a{Analysis::BlandAltman};
            if (!raw) {
                a.insert(Analysis::Ccm);
            }
            print_section(analyse(ba_flags.resolve(), a), "bland_altman", out);
        } else if (*anova) {
            print_section(analyse(anova_flags.resolve(), {Analysis::Anova}), "anova", out);
        } else if (*sens) {
            if (at_l || at_b) {
                if (!at_l || !at_b) {
                    throw ValidationError("--l and --b must be given together");
                }
                const auto s = clinical::ita_sensitivity({*at_l, 0.0, *at_b});
                const json doc = {{"at", {{"l", *at_l}, {"b", *at_b}}},
                                  {"ita_degrees", clinical::ita({*at_l, 0.0, *at_b})},
                                  {"d_ita_d_l_rad", s.d_ita_d_l_rad},
                                  {"d_ita_d_b_rad", s.d_ita_d_b_rad},
                                  {"d_ita_d_l_deg", s.d_ita_d_l},
                                  {"d_ita_d_b_deg", s.d_ita_d_b}};
                out << report::emit_json(doc);
            } else {
                std::set<Analysis> a{Analysis::Sensitivity};
                if (!raw) {
                    a.insert(Analysis::Ccm);
                }
                print_section(analyse(sens_flags.resolve(), a), "sensitivity", out);
            }
        } else if (*simulate) {
            SimulatorConfig sc = sim_config_path.empty() ? simulate::default_config()
                                                         : sim_config::load(sim_config_path);
            if (sim_seed) {
                sc.cohort.seed = *sim_seed;
            }
            if (sim_subjects) {
                sc.cohort.subject_count = *sim_subjects;
            }
            if (dump_config) {
                out << sim_config::dump(sc);
                return kOk;
            }
            const auto cohort = simulate::generate_cohort(sc.cohort, sc.devices);
            ensure_dir(sim_out_dir);
            PatchTable table{cohort.records, cohort.quantize_bits == 8 ? RgbEncoding::EightBit
                                                                      : RgbEncoding::Unit};
            const auto dir = fs::path(sim_out_dir);
            patch_csv::write_file((dir / "cohort.csv").string(), patch_csv::format(table));
            patch_csv::write_file((dir / "truth.csv").string(),
                                  patch_csv::format_truth(cohort.truth));
            out << "wrote " << cohort.records.size() << " records to "
                << (dir / "cohort.csv").string() << "\n";
        } else if (*full) {
            const auto cfg = report_flags.resolve();
            const auto table = patch_csv::ingest_all(cfg.inputs);
            const auto rep = pipeline::run_analysis(cfg, table.records);
            ensure_dir(cfg.out_dir);
            const auto dir = fs::path(cfg.out_dir);
            if (cfg.format != "markdown") {
                patch_csv::write_file((dir / "report.json").string(),
                                      report::emit(rep, report::Format::Json));
            }
            if (cfg.format != "json") {
                patch_csv::write_file((dir / "report.md").string(),
                                      report::emit(rep, report::Format::Markdown));
            }
            if (rep.ccm) {
                for (const auto& c : *rep.ccm) {
                    const auto name = "ccm_" + cfg.reference_device + "_" + c.device + ".json";
                    patch_csv::write_file((dir / name).string(),
                                          report::emit_json(report::to_json(c.ccm)));
                }
            }
            out << "report written to " << dir.string() << "\n";
        }
        return kOk;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

} // namespace dermacal::cli

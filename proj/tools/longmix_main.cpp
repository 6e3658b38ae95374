// longmix: longitudinal linear mixed-model pipeline
//
// Subcommands cover the full workflow: reshape wide spreadsheets to long
// format, summarise group trajectories, fit random-intercept models under
// four covariance structures, compare candidates, turn scientific questions
// into contrasts, emit diagnostics, and cross-check the engine against the
// dense brute-force oracle on simulated data.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "longmix/dataio.hpp"
#include "longmix/diagnostics.hpp"
#include "longmix/engine.hpp"
#include "longmix/error.hpp"
#include "longmix/inference.hpp"
#include "longmix/oracle.hpp"
#include "longmix/report.hpp"
#include "longmix/serialize.hpp"

namespace {

using namespace longmix;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

FormulaAst model_formula(const std::string& token) {
    if (token == "m1") return parse_formula("weight ~ tw + grp");
    if (token == "m2") return parse_formula("weight ~ tw * grp");
    if (token == "m3") return parse_formula("weight ~ tw + grp + tw:grp3");
    throw Error(Errc::ParseError, "unknown model token '" + token + "' (expected m1, m2, m3)");
}

LongDataset load_validated(const std::string& path) {
    LongDataset d = load_dataset(path);
    const ValidationReport report = validate_long(d);
    if (!report.ok()) {
        std::ostringstream msg;
        msg << "dataset fails validation (" << report.findings.size() << " findings)";
        for (const auto& f : report.findings) msg << "\n  " << f.message;
        throw Error(Errc::BadNumber, msg.str());
    }
    return d;
}

std::string default_outdir() {
    if (const char* env = std::getenv("LONGMIX_OUTDIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return ".";
}

void write_or_print(const std::string& content, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << content;
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw Error(Errc::IoError, "cannot write " + out_path);
    out << content;
}

ModelSpec make_spec(const std::string& model, const std::string& structure,
                    const std::string& method) {
    ModelSpec spec;
    spec.fixed = model_formula(model);
    spec.structure.kind = kind_from_token(structure);
    spec.method = method_from_token(method);
    return spec;
}

std::vector<FittedModel> fit_main_set(const LongDataset& d) {
    // Nested mean structures share the ri covariance; each fit seeds the
    // next so the likelihood ordering is preserved numerically.
    std::vector<FittedModel> models;
    FittedModel m1 = fit(make_spec("m1", "ri", "ml"), d);
    m1.label = "Model 1: tw + grp";
    FitOptions warm2;
    warm2.extra_starts.push_back(m1.theta);
    FittedModel m3 = fit(make_spec("m3", "ri", "ml"), d, warm2);
    m3.label = "Model 3: tw + grp + tw:grp3";
    FitOptions warm3;
    warm3.extra_starts.push_back(m3.theta);
    FittedModel m2 = fit(make_spec("m2", "ri", "ml"), d, warm3);
    m2.label = "Model 2: tw * grp";
    models.push_back(std::move(m1));
    models.push_back(std::move(m2));
    models.push_back(std::move(m3));
    return models;
}

std::vector<FittedModel> fit_sensitivity_set(const LongDataset& d) {
    std::vector<FittedModel> models;
    FittedModel main_fit = fit(make_spec("m3", "ri", "ml"), d);
    main_fit.label = "Main: random intercept";
    FitOptions warm;
    warm.extra_starts.push_back(main_fit.theta);
    FittedModel rs = fit(make_spec("m3", "ris", "ml"), d, warm);
    rs.label = "RS: random intercept + slope";
    FittedModel ar1 = fit(make_spec("m3", "ri+ar1", "ml"), d, warm);
    ar1.label = "AR(1): rand. intercept + AR(1)";
    FittedModel hv = fit(make_spec("m3", "ri+hv", "ml"), d, warm);
    hv.label = "HV: rand. intercept + hetero. variance";
    models.push_back(std::move(main_fit));
    models.push_back(std::move(rs));
    models.push_back(std::move(ar1));
    models.push_back(std::move(hv));
    return models;
}

std::pair<int, int> parse_week_range(const std::string& text) {
    const auto dash = text.find('-');
    int lo = 0, hi = 0;
    try {
        if (dash == std::string::npos) {
            lo = hi = std::stoi(text);
        } else {
            lo = std::stoi(text.substr(0, dash));
            hi = std::stoi(text.substr(dash + 1));
        }
    } catch (const std::exception&) {
        throw Error(Errc::ParseError, "cannot parse week range '" + text + "'");
    }
    if (lo < 1 || hi < lo) throw Error(Errc::ParseError, "invalid week range '" + text + "'");
    return {lo, hi};
}

std::vector<int> parse_group_sizes(const std::string& text) {
    std::vector<int> sizes;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            sizes.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw Error(Errc::ParseError, "cannot parse group sizes '" + text + "'");
        }
    }
    if (sizes.empty()) throw Error(Errc::ParseError, "empty group size list");
    return sizes;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            values.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw Error(Errc::ParseError, "cannot parse numeric list '" + text + "'");
        }
    }
    return values;
}

int run_oracle_check(std::uint64_t seed, int trials, double tol) {
    TruthParams truth = default_truth();
    SimLayout layout;
    layout.group_sizes = {2, 2, 1};
    layout.weeks = 4;
    layout.seed = seed;
    const LongDataset d = simulate(truth, layout);
    const DesignSet ds = build_design(truth.formula, d);

    const CovKind kinds[] = {CovKind::RandomIntercept, CovKind::RandomInterceptSlope,
                             CovKind::RandomInterceptAR1, CovKind::RandomInterceptHeteroVar};
    Rng rng(seed ^ 0x6f72636c65ULL);
    bool ok = true;
    for (const CovKind kind : kinds) {
        double worst_ll = 0.0, worst_beta = 0.0;
        for (int trial = 0; trial < trials; ++trial) {
            const CovarianceStructure theta =
                random_interior_structure(kind, ds.n_groups(), rng);
            const GlsResult engine_gls = gls_beta(theta, ds);
            const GlsResult oracle = dense_gls(theta, d, truth.formula);
            const double beta_err = (engine_gls.beta - oracle.beta).norm() /
                                    std::max(1.0, oracle.beta.norm());
            TruthParams at_theta{truth.formula, oracle.beta, theta};
            const double ml_err = std::fabs(profile_loglik(theta, ds, Method::ML) -
                                            dense_loglik(at_theta, d, Method::ML));
            const double reml_err = std::fabs(profile_loglik(theta, ds, Method::REML) -
                                              dense_loglik(at_theta, d, Method::REML));
            worst_ll = std::max({worst_ll, ml_err, reml_err});
            worst_beta = std::max(worst_beta, beta_err);
        }
        const bool pass = worst_ll < tol && worst_beta < tol;
        ok = ok && pass;
        std::cout << (pass ? "ok    " : "FAIL  ") << kind_token(kind)
                  << "  max |loglik diff| " << worst_ll << "  max rel |beta diff| "
                  << worst_beta << "\n";
    }
    if (!ok) {
        std::cerr << "oracle-check: engine and dense oracle disagree beyond " << tol << "\n";
        return kExitNumerical;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"longitudinal linear mixed-model pipeline"};
    app.require_subcommand(1);

    // reshape
    std::string reshape_in, reshape_out;
    auto* reshape = app.add_subcommand("reshape", "convert a wide table to long format");
    reshape->add_option("input", reshape_in, "wide csv (mouseid,grp,bw1..bwW)")->required();
    reshape->add_option("--out", reshape_out, "output path (default stdout)");

    // eda
    std::string eda_in, eda_out;
    auto* eda = app.add_subcommand("eda", "group-by-week mean weights");
    eda->add_option("input", eda_in, "long or wide csv")->required();
    eda->add_option("--out", eda_out, "output path (default stdout)");

    // fit
    std::string fit_in, fit_out, fit_model = "m3", fit_structure = "ri", fit_method = "ml";
    auto* fit_cmd = app.add_subcommand("fit", "fit one mixed model, emit JSON");
    fit_cmd->add_option("input", fit_in, "long or wide csv")->required();
    fit_cmd->add_option("--model", fit_model, "m1|m2|m3 (default m3)");
    fit_cmd->add_option("--structure", fit_structure, "ri|ris|ri+ar1|ri+hv (default ri)");
    fit_cmd->add_option("--method", fit_method, "ml|reml (default ml)");
    fit_cmd->add_option("--out", fit_out, "output path (default stdout)");

    // compare
    std::string cmp_in, cmp_out, cmp_set = "main";
    auto* cmp = app.add_subcommand("compare", "model-comparison table (AIC/BIC/logLik)");
    cmp->add_option("input", cmp_in, "long or wide csv")->required();
    cmp->add_option("--set", cmp_set, "main (m1,m2,m3) or sensitivity (ri,ris,ri+ar1,ri+hv)");
    cmp->add_option("--out", cmp_out, "output path (default stdout)");

    // contrasts
    std::string con_in, con_out, con_weeks = "1-12";
    auto* con = app.add_subcommand("contrasts", "weekly group differences from the final model");
    con->add_option("input", con_in, "long or wide csv")->required();
    con->add_option("--weeks", con_weeks, "week range, e.g. 1-12");
    con->add_option("--out", con_out, "output path (default stdout)");

    // gains
    std::string gains_in, gains_out;
    auto* gains_cmd = app.add_subcommand("gains", "12-week gains from the final model");
    gains_cmd->add_option("input", gains_in, "long or wide csv")->required();
    gains_cmd->add_option("--out", gains_out, "output path (default stdout)");

    // diagnose
    std::string diag_in, diag_outdir, diag_model = "m3", diag_structure = "ri",
                diag_method = "reml";
    auto* diag = app.add_subcommand("diagnose", "residual / random-effect diagnostics files");
    diag->add_option("input", diag_in, "long or wide csv")->required();
    diag->add_option("--model", diag_model, "m1|m2|m3 (default m3)");
    diag->add_option("--structure", diag_structure, "ri|ris|ri+ar1|ri+hv (default ri)");
    diag->add_option("--method", diag_method, "ml|reml (default reml)");
    diag->add_option("--outdir", diag_outdir, "output directory (default $LONGMIX_OUTDIR or .)");

    // simulate
    std::string sim_out, sim_groups = "10,10,11", sim_structure = "ri", sim_model = "m3",
                sim_beta;
    int sim_weeks = 12;
    std::uint64_t sim_seed = 0;
    double sim_sigma_b0 = 1.72, sim_sigma = 1.37, sim_rho = 0.3, sim_slope_sd = 0.1;
    std::string sim_ratios = "1.25,1.5";
    auto* sim = app.add_subcommand("simulate", "draw a synthetic dataset from the growth model");
    sim->add_option("--seed", sim_seed, "rng seed (default 0)");
    sim->add_option("--groups", sim_groups, "per-group mouse counts (default 10,10,11)");
    sim->add_option("--weeks", sim_weeks, "weeks per mouse (default 12)");
    sim->add_option("--model", sim_model, "mean design m1|m2|m3 (default m3)");
    sim->add_option("--beta", sim_beta, "comma list of fixed effects (default published fit)");
    sim->add_option("--structure", sim_structure, "ri|ris|ri+ar1|ri+hv (default ri)");
    sim->add_option("--sigma-b0", sim_sigma_b0, "intercept sd (default 1.72)");
    sim->add_option("--sigma", sim_sigma, "residual sd (default 1.37)");
    sim->add_option("--rho", sim_rho, "AR(1) correlation (default 0.3)");
    sim->add_option("--slope-sd", sim_slope_sd, "random slope sd for ris (default 0.1)");
    sim->add_option("--ratios", sim_ratios, "residual sd ratios for ri+hv (default 1.25,1.5)");
    sim->add_option("--out", sim_out, "output path (default stdout)");

    // oracle-check
    std::uint64_t oc_seed = 7;
    int oc_trials = 25;
    double oc_tol = 1e-8;
    auto* oc = app.add_subcommand("oracle-check",
                                  "dense-oracle vs engine equivalence on simulated data");
    oc->add_option("--seed", oc_seed, "rng seed (default 7)");
    oc->add_option("--trials", oc_trials, "random parameter draws per structure (default 25)");
    oc->add_option("--tol", oc_tol, "agreement tolerance (default 1e-8)");

    // coverage
    std::uint64_t cov_seed = 1;
    int cov_reps = 500;
    std::string cov_out;
    auto* cov = app.add_subcommand("coverage", "simulate-fit-contrast CI coverage experiment");
    cov->add_option("--seed", cov_seed, "rng seed (default 1)");
    cov->add_option("--reps", cov_reps, "replicates (default 500, minimum 100)");
    cov->add_option("--out", cov_out, "output path (default stdout)");

    // report
    std::string rep_in, rep_outdir;
    auto* rep = app.add_subcommand("report", "end-to-end pipeline report");
    rep->add_option("input", rep_in, "long or wide csv")->required();
    rep->add_option("--outdir", rep_outdir, "output directory (default $LONGMIX_OUTDIR or .)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (reshape->parsed()) {
            const WideDataset w = read_wide_csv(reshape_in);
            for (const auto& warning : w.warnings) std::cerr << "warning: " << warning << "\n";
            std::ostringstream buf;
            write_long_csv(pivot_longer(w), buf);
            write_or_print(buf.str(), reshape_out);
        } else if (eda->parsed()) {
            std::ostringstream buf;
            write_means_csv(group_week_means(load_validated(eda_in)), buf);
            write_or_print(buf.str(), eda_out);
        } else if (fit_cmd->parsed()) {
            const LongDataset d = load_validated(fit_in);
            const FittedModel m = fit(make_spec(fit_model, fit_structure, fit_method), d);
            write_or_print(fitted_model_json(m), fit_out);
            if (m.boundary) std::cerr << "note: variance estimate on the boundary\n";
            if (!m.converged) {
                std::cerr << "error: optimizer did not converge\n";
                return kExitNumerical;
            }
        } else if (cmp->parsed()) {
            const LongDataset d = load_validated(cmp_in);
            std::vector<FittedModel> models;
            if (cmp_set == "main") {
                models = fit_main_set(d);
            } else if (cmp_set == "sensitivity") {
                models = fit_sensitivity_set(d);
            } else {
                throw Error(Errc::ParseError, "unknown set '" + cmp_set + "'");
            }
            std::ostringstream buf;
            write_compare_csv(compare_table(models), buf);
            write_or_print(buf.str(), cmp_out);
        } else if (con->parsed()) {
            const auto [lo, hi] = parse_week_range(con_weeks);
            const LongDataset d = load_validated(con_in);
            const FittedModel m = fit(make_spec("m3", "ri", "ml"), d);
            std::ostringstream buf;
            write_weekly_csv(weekly_differences(m, lo, hi), buf);
            write_or_print(buf.str(), con_out);
        } else if (gains_cmd->parsed()) {
            const LongDataset d = load_validated(gains_in);
            const FittedModel m = fit(make_spec("m3", "ri", "ml"), d);
            std::ostringstream buf;
            write_gains_csv(gains(m), buf);
            write_or_print(buf.str(), gains_out);
        } else if (diag->parsed()) {
            const std::string outdir = diag_outdir.empty() ? default_outdir() : diag_outdir;
            std::filesystem::create_directories(outdir);
            const LongDataset d = load_validated(diag_in);
            const FittedModel m = fit(make_spec(diag_model, diag_structure, diag_method), d);
            const DesignSet ds = build_design(m.spec.fixed, d);
            const auto table = residual_table(m, ds);
            const auto ranef = blups(m, ds);
            std::vector<double> pearson, intercepts;
            for (const auto& row : table) pearson.push_back(row.resid_pearson);
            for (const auto& row : ranef) intercepts.push_back(row.b(0));
            write_diagnostics_csv(table, outdir + "/diagnostics.csv");
            write_ranef_csv(ranef, outdir + "/ranef.csv");
            write_qq_csv(qq_points(pearson), outdir + "/qq_resid.csv");
            write_qq_csv(qq_points(intercepts), outdir + "/qq_ranef.csv");
            write_resid_by_week_csv(residuals_by_week(table), outdir + "/resid_by_week.csv");
        } else if (sim->parsed()) {
            TruthParams truth;
            truth.formula = model_formula(sim_model);
            if (sim_beta.empty()) {
                truth.beta = default_truth().beta;
                if (sim_model == "m1") {
                    truth.beta = default_truth().beta.head(4).eval();
                } else if (sim_model == "m2") {
                    truth.beta.resize(6);
                    truth.beta << 19.004, 0.337, 14.925, 17.254, 0.0, 1.738;
                }
            } else {
                const auto values = parse_double_list(sim_beta);
                truth.beta.resize(static_cast<Index>(values.size()));
                for (std::size_t i = 0; i < values.size(); ++i) {
                    truth.beta(static_cast<Index>(i)) = values[i];
                }
            }
            const CovKind kind = kind_from_token(sim_structure);
            switch (kind) {
                case CovKind::RandomIntercept:
                    truth.structure = random_intercept(sim_sigma_b0, sim_sigma);
                    break;
                case CovKind::RandomInterceptAR1:
                    truth.structure = random_intercept_ar1(sim_sigma_b0, sim_sigma, sim_rho);
                    break;
                case CovKind::RandomInterceptHeteroVar:
                    truth.structure = random_intercept_hetero(sim_sigma_b0, sim_sigma,
                                                              parse_double_list(sim_ratios));
                    break;
                case CovKind::RandomInterceptSlope: {
                    Eigen::Matrix2d l = Eigen::Matrix2d::Zero();
                    l(0, 0) = sim_sigma_b0;
                    l(1, 1) = sim_slope_sd;
                    truth.structure = random_intercept_slope(l, sim_sigma);
                    break;
                }
            }
            SimLayout layout;
            layout.group_sizes = parse_group_sizes(sim_groups);
            layout.weeks = sim_weeks;
            layout.seed = sim_seed;
            std::ostringstream buf;
            write_long_csv(simulate(truth, layout), buf);
            write_or_print(buf.str(), sim_out);
        } else if (oc->parsed()) {
            return run_oracle_check(oc_seed, oc_trials, oc_tol);
        } else if (cov->parsed()) {
            const TruthParams truth = default_truth();
            std::vector<Contrast> contrasts;
            const char* names[] = {"(Intercept)", "tw", "grp2", "grp3", "tw:grp3"};
            for (int j = 0; j < 5; ++j) {
                Vector c = Vector::Zero(5);
                c(j) = 1.0;
                contrasts.push_back({names[j], c});
            }
            Vector gain_diff = Vector::Zero(5);
            gain_diff(4) = 11.0;
            contrasts.push_back({"gain3-gain1", gain_diff});
            SimLayout layout;
            layout.seed = cov_seed;
            const auto rows = coverage_experiment(truth, layout, cov_reps, contrasts);
            if (cov_out.empty()) {
                std::cout << "contrast,reps,fit_failures,covered,coverage\n";
                for (const auto& r : rows) {
                    std::cout << r.label << ',' << r.reps << ',' << r.fit_failures << ','
                              << r.covered << ',' << r.coverage << '\n';
                }
            } else {
                write_coverage_csv(rows, cov_out);
            }
        } else if (rep->parsed()) {
            const std::string outdir = rep_outdir.empty() ? default_outdir() : rep_outdir;
            std::filesystem::create_directories(outdir);
            const LongDataset d = load_validated(rep_in);
            ReportInputs inputs;
            auto models = fit_main_set(d);
            inputs.comparison = compare_table(models);
            inputs.final_model = models[2];  // Model 3
            inputs.weekly = weekly_differences(models[2]);
            inputs.gain_rows = gains(models[2]);
            const DesignSet ds = build_design(models[2].spec.fixed, d);
            inputs.diagnostics = residual_table(models[2], ds);
            emit_report(inputs, outdir + "/report.md");
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.category() == ErrorCategory::Data ? kExitData : kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return 0;
}

#include "geocal/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"

#include "geocal/analysis.hpp"
#include "geocal/calibration.hpp"
#include "geocal/diagnostics.hpp"
#include "geocal/io.hpp"
#include "geocal/reliability.hpp"

namespace geocal {
namespace {

using ojson = nlohmann::ordered_json;

struct RunConfig {
    double epsilon = 1e-6;
    double lambda1 = 0.01;
    double lambda2 = 0.01;
    double reliability_lambda = 1.0;
    double alpha = 0.05;
    std::size_t bins = 15;
    std::string bin_mode = "equal_width";
    std::uint64_t seed = 42;
    bool trace_constraint = false;
    double delta = 1e-3;
    int max_iterations = 500;
    double gradient_tolerance = 1e-8;
    std::string threshold_rule = "smallest";
    // Degree of parallelism only; never changes results, so it is not echoed.
    std::size_t workers = 1;

    FitConfig fit_config() const {
        FitConfig f;
        f.lambda1 = lambda1;
        f.lambda2 = lambda2;
        f.delta = delta;
        f.max_iterations = max_iterations;
        f.gradient_tolerance = gradient_tolerance;
        f.trace_constraint = trace_constraint;
        f.interior.epsilon = epsilon;
        return f;
    }

    BinningScheme ece_scheme() const {
        return {bin_mode == "equal_count" ? BinMode::EqualCount : BinMode::EqualWidth, bins};
    }

    ThresholdRule rule() const { return threshold_rule == "largest" ? ThresholdRule::Largest : ThresholdRule::Smallest; }

    ojson to_json() const {
        ojson j;
        j["epsilon"] = epsilon;
        j["lambda1"] = lambda1;
        j["lambda2"] = lambda2;
        j["reliability_lambda"] = reliability_lambda;
        j["alpha"] = alpha;
        j["bins"] = bins;
        j["bin_mode"] = bin_mode;
        j["seed"] = seed;
        j["trace_constraint"] = trace_constraint;
        j["delta"] = delta;
        j["max_iterations"] = max_iterations;
        j["gradient_tolerance"] = gradient_tolerance;
        j["threshold_rule"] = threshold_rule;
        return j;
    }
};

void add_run_config(CLI::App* cmd, RunConfig& rc) {
    cmd->add_option("--epsilon", rc.epsilon, "Clipping floor for probabilities")->envname("GEOCAL_EPSILON");
    cmd->add_option("--lambda1", rc.lambda1, "Penalty weight on ||A - I||_F^2")->envname("GEOCAL_LAMBDA1");
    cmd->add_option("--lambda2", rc.lambda2, "Penalty weight on ||b||^2")->envname("GEOCAL_LAMBDA2");
    cmd->add_option("--lambda", rc.reliability_lambda, "Reliability decay rate")->envname("GEOCAL_LAMBDA");
    cmd->add_option("--alpha", rc.alpha, "Target automated error rate")->envname("GEOCAL_ALPHA");
    cmd->add_option("--bins", rc.bins, "ECE bin count")->envname("GEOCAL_BINS");
    cmd->add_option("--bin-mode", rc.bin_mode, "ECE binning")
        ->check(CLI::IsMember({"equal_width", "equal_count"}))
        ->envname("GEOCAL_BIN_MODE");
    cmd->add_option("--seed", rc.seed, "Random seed")->envname("GEOCAL_SEED");
    cmd->add_flag("--trace-constraint", rc.trace_constraint, "Shift diag(A) so that tr(A) = c - 1")
        ->envname("GEOCAL_TRACE_CONSTRAINT");
    cmd->add_option("--delta", rc.delta, "Floor on the smallest eigenvalue of sym(A)")->envname("GEOCAL_DELTA");
    cmd->add_option("--max-iter", rc.max_iterations, "Optimizer iteration cap")->envname("GEOCAL_MAX_ITER");
    cmd->add_option("--tol", rc.gradient_tolerance, "Gradient tolerance on ||grad|| / n")->envname("GEOCAL_TOL");
    cmd->add_option("--threshold-rule", rc.threshold_rule, "Qualifying score used as tau_star")
        ->check(CLI::IsMember({"smallest", "largest"}))
        ->envname("GEOCAL_THRESHOLD_RULE");
    cmd->add_option("--workers", rc.workers, "Worker threads")->envname("GEOCAL_WORKERS");
}

struct Context {
    std::ostream& out;
    std::ostream& err;
    std::string command;
    RunConfig rc;
    ojson params = ojson::object();
    ojson inputs = ojson::object();

    void add_input(const std::string& role, const std::string& path) {
        inputs[role] = {{"path", path}, {"sha256", sha256_file(path)}};
    }

    ojson metadata() const {
        ojson m;
        m["tool"] = std::string(kToolName);
        m["version"] = std::string(kToolVersion);
        m["format_version"] = kFormatVersion;
        m["command"] = command;
        m["config"] = rc.to_json();
        m["params"] = params;
        m["inputs"] = inputs;
        return m;
    }

    // Writes to path, or to the output stream when path is empty.
    void emit(const std::string& path, const std::string& content) const {
        if (path.empty()) {
            out << content;
        } else {
            write_text_file(path, content);
        }
    }
};

std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

ojson nullable(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

struct Inputs {
    std::vector<ProbVector> probs;
    std::vector<std::size_t> labels;
    std::size_t c = 0;
};

// Reads data and, when a model path is given, replaces the probabilities with
// calibrated ones. Returns the reliability lambda to use.
double load_scored_inputs(Context& ctx, const std::string& data_path, const std::string& model_path,
                          bool require_labels, Inputs& in) {
    ctx.add_input("data", data_path);
    const ProbabilityTable table = read_probability_csv(data_path, require_labels);
    in.c = table.c;
    in.labels = table.labels;
    if (model_path.empty()) {
        in.probs = table.probs;
        return ctx.rc.reliability_lambda;
    }
    ctx.add_input("model", model_path);
    const StoredModel stored = read_model(model_path);
    if (stored.model.c != table.c) {
        throw Error(ErrorKind::DimensionMismatch,
                    fmt::format("model has {} classes, data has {}", stored.model.c, table.c));
    }
    in.probs = apply_calibration(stored.model, table.probs);
    return stored.policy.lambda;
}

int cmd_fit(Context& ctx, const std::string& data_path, const std::string& out_path) {
    ctx.add_input("data", data_path);
    const LabeledDataset data = read_dataset_csv(data_path);
    const RunConfig& rc = ctx.rc;
    const CalibrationModel model = fit_geometric(data, rc.fit_config());

    const auto cal = apply_calibration(model, data.probabilities());
    const auto labels = data.labels();
    const auto scores = reliability_scores(cal, rc.reliability_lambda);
    const auto correct = correctness(cal, labels);
    ReliabilityPolicy policy{rc.reliability_lambda, 0.0, rc.alpha};
    policy.tau_star = fit_threshold(scores, correct, rc.alpha, rc.rule());

    write_text_file(out_path, dump(model_to_json(model, policy, ctx.metadata())));

    std::size_t automated = 0;
    std::size_t automated_wrong = 0;
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!correct[i]) ++wrong;
        if (scores[i] >= policy.tau_star) {
            ++automated;
            if (!correct[i]) ++automated_wrong;
        }
    }
    const double n = static_cast<double>(data.size());
    ojson summary;
    summary["model"] = out_path;
    summary["n"] = data.size();
    summary["c"] = data.classes();
    summary["converged"] = model.fit_info.converged;
    summary["iterations"] = model.fit_info.iterations;
    summary["final_loss"] = model.fit_info.final_loss;
    summary["small_sample"] = model.fit_info.small_sample;
    summary["tau_star"] = policy.tau_star;
    summary["train_error_rate"] = static_cast<double>(wrong) / n;
    summary["train_deferral_rate"] = static_cast<double>(data.size() - automated) / n;
    summary["train_automated_error_rate"] =
        automated == 0 ? 0.0 : static_cast<double>(automated_wrong) / static_cast<double>(automated);
    ctx.out << dump(summary);
    return kExitOk;
}

int cmd_apply(Context& ctx, const std::string& model_path, const std::string& data_path, const std::string& out_path) {
    ctx.add_input("model", model_path);
    ctx.add_input("data", data_path);
    const StoredModel stored = read_model(model_path);
    const ProbabilityTable table = read_probability_csv(data_path, false);
    if (stored.model.c != table.c) {
        throw Error(ErrorKind::DimensionMismatch,
                    fmt::format("model has {} classes, data has {}", stored.model.c, table.c));
    }

    std::ostringstream csv;
    write_comment_block(csv, ctx.metadata());
    for (std::size_t j = 0; j < table.c; ++j) csv << "p_cal_" << j << ',';
    csv << "predicted_class,reliability,decision\n";
    std::size_t automated = 0;
    for (const auto& p : table.probs) {
        const ProbVector cal = apply_calibration(stored.model, p);
        const double r = reliability_score(cal, stored.policy.lambda);
        const Decision d = decide(r, stored.policy, argmax_class(cal));
        if (d.automated()) ++automated;
        for (std::size_t j = 0; j < table.c; ++j) csv << format_double(cal[j]) << ',';
        csv << d.predicted_class << ',' << format_double(r) << ',' << (d.automated() ? "automate" : "defer") << '\n';
    }
    ctx.emit(out_path, csv.str());
    if (!out_path.empty()) {
        ctx.out << dump({{"rows", table.probs.size()},
                         {"automated", automated},
                         {"deferred", table.probs.size() - automated},
                         {"tau_star", stored.policy.tau_star}});
    }
    return kExitOk;
}

void write_bins(std::ostream& csv, const std::string& mode, const std::vector<DiagramBin>& bins) {
    for (std::size_t b = 0; b < bins.size(); ++b) {
        csv << mode << ',' << b << ',' << format_double(bins[b].lower) << ',' << format_double(bins[b].upper) << ','
            << format_double(bins[b].mean_confidence) << ',' << format_double(bins[b].empirical_frequency) << ','
            << bins[b].count << '\n';
    }
}

int cmd_evaluate(Context& ctx, const std::string& data_path, const std::string& model_path, const std::string& out_dir,
                 const std::string& diagram_mode, std::size_t diagram_bins) {
    Inputs in;
    const double lambda = load_scored_inputs(ctx, data_path, model_path, true, in);
    const RunConfig& rc = ctx.rc;
    const EvaluationReport report = classification_report(in.probs, in.labels, rc.ece_scheme(), rc.epsilon);
    const auto scores = reliability_scores(in.probs, lambda);
    const auto correct = correctness(in.probs, in.labels);

    std::optional<ErrorDetectionCurves> curves;
    try {
        curves = error_detection_curves(scores, correct);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::UndefinedAUC) throw;
    }

    ojson j;
    j["metadata"] = ctx.metadata();
    j["n"] = report.n;
    j["c"] = in.c;
    j["accuracy"] = report.accuracy;
    j["log_loss"] = report.log_loss;
    j["brier"] = report.brier;
    j["ece_overall"] = report.ece_overall;
    j["ece_per_class"] = report.ece_per_class;
    j["confusion"] = report.confusion;
    auto per_class = ojson::array();
    for (const auto& m : report.per_class) {
        per_class.push_back({{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}});
    }
    j["per_class"] = per_class;
    j["reliability_lambda"] = lambda;
    j["auc"] = curves ? ojson(curves->auc) : ojson(nullptr);

    const BinningScheme diagram{diagram_mode == "equal_width" ? BinMode::EqualWidth : BinMode::EqualCount,
                                diagram_bins};
    std::ostringstream bins_csv;
    write_comment_block(bins_csv, ctx.metadata());
    bins_csv << "mode,bin,lower,upper,mean_confidence,empirical_frequency,count\n";
    write_bins(bins_csv, "overall", reliability_diagram(in.probs, in.labels, EceMode::Overall(), diagram));
    for (std::size_t cls = 0; cls < in.c; ++cls) {
        write_bins(bins_csv, fmt::format("class_{}", cls),
                   reliability_diagram(in.probs, in.labels, EceMode::PerClass(cls), diagram));
    }

    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    write_text_file((dir / "diagram.csv").string(), bins_csv.str());
    if (curves) {
        std::ostringstream roc;
        write_comment_block(roc, ctx.metadata());
        roc << "threshold,false_positive_rate,true_positive_rate\n";
        for (const auto& p : curves->roc) {
            roc << format_double(p.threshold) << ',' << format_double(p.x) << ',' << format_double(p.y) << '\n';
        }
        write_text_file((dir / "roc.csv").string(), roc.str());
        std::ostringstream pr;
        write_comment_block(pr, ctx.metadata());
        pr << "threshold,recall,precision\n";
        for (const auto& p : curves->pr) {
            pr << format_double(p.threshold) << ',' << format_double(p.x) << ',' << format_double(p.y) << '\n';
        }
        write_text_file((dir / "pr.csv").string(), pr.str());
    }
    write_text_file((dir / "report.json").string(), dump(j));
    ctx.out << dump(j);
    return kExitOk;
}

int cmd_pareto(Context& ctx, const std::string& data_path, const std::string& model_path, const std::string& out_path) {
    Inputs in;
    const double lambda = load_scored_inputs(ctx, data_path, model_path, true, in);
    const auto scores = reliability_scores(in.probs, lambda);
    const auto frontier = pareto_frontier(scores, correctness(in.probs, in.labels));

    std::ostringstream csv;
    write_comment_block(csv, ctx.metadata());
    csv << "threshold,deferral_rate,automated_error_rate,automated,empty\n";
    for (const auto& p : frontier) {
        csv << format_double(p.threshold) << ',' << format_double(p.deferral_rate) << ','
            << format_double(p.automated_error_rate) << ',' << p.automated << ',' << (p.empty ? 1 : 0) << '\n';
    }
    ctx.emit(out_path, csv.str());
    return kExitOk;
}

int cmd_bootstrap(Context& ctx, const std::string& data_path, bool recovery, const std::vector<std::size_t>& sizes,
                  std::size_t replicates, std::size_t c, double temperature, double concentration,
                  const std::string& out_path) {
    BootstrapOptions options;
    options.sizes = sizes;
    options.replicates = replicates;
    options.fit = ctx.rc.fit_config();
    options.seed = ctx.rc.seed;
    options.workers = ctx.rc.workers;
    ctx.params["sizes"] = sizes;
    ctx.params["replicates"] = replicates;
    ctx.params["reference"] = recovery ? "true_map" : "full_sample";

    ConvergenceTable table;
    if (recovery) {
        ctx.params["c"] = c;
        ctx.params["temperature"] = temperature;
        ctx.params["concentration"] = concentration;
        SyntheticSpec spec;
        spec.c = c;
        spec.true_map = temperature_distortion(c, temperature);
        spec.concentration = concentration;
        table = recovery_convergence(spec, options);
    } else {
        require(!data_path.empty(), ErrorKind::InvalidArgument, "bootstrap needs --data unless --recovery is given");
        ctx.add_input("data", data_path);
        table = bootstrap_convergence(read_dataset_csv(data_path), options);
    }

    std::ostringstream csv;
    write_comment_block(csv, ctx.metadata());
    csv << "size,mean_error,sd_error,failures,replicates\n";
    for (std::size_t i = 0; i < table.sizes.size(); ++i) {
        csv << table.sizes[i] << ',' << format_double(table.mean_error[i]) << ',' << format_double(table.sd_error[i])
            << ',' << table.failures[i] << ',' << table.replicates << '\n';
    }
    ctx.emit(out_path, csv.str());

    ojson summary;
    auto rows = ojson::array();
    for (std::size_t i = 0; i < table.sizes.size(); ++i) {
        rows.push_back({{"size", table.sizes[i]},
                        {"mean_error", table.mean_error[i]},
                        {"sd_error", table.sd_error[i]},
                        {"failures", table.failures[i]}});
    }
    summary["table"] = rows;
    try {
        const RateFit rate = fit_rate_slope(table);
        summary["slope"] = rate.slope;
        summary["ci_low"] = nullable(rate.ci_low);
        summary["ci_high"] = nullable(rate.ci_high);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::InvalidArgument) throw;
        summary["slope"] = nullptr;
        summary["slope_note"] = e.what();
    }
    if (!out_path.empty()) ctx.out << dump(summary);
    return kExitOk;
}

int cmd_compare(Context& ctx, const std::string& data_path, const std::string& eval_path,
                const std::vector<std::string>& method_names, double deferral, const std::string& out_path) {
    ctx.add_input("data", data_path);
    const LabeledDataset train = read_dataset_csv(data_path);
    LabeledDataset eval = train;
    if (!eval_path.empty()) {
        ctx.add_input("eval", eval_path);
        eval = read_dataset_csv(eval_path);
    }
    std::vector<Method> methods;
    for (const auto& name : method_names) methods.push_back(parse_method(name));
    ctx.params["methods"] = method_names;
    ctx.params["deferral_target"] = deferral;

    CompareConfig cfg;
    cfg.fit = ctx.rc.fit_config();
    cfg.reliability_lambda = ctx.rc.reliability_lambda;
    cfg.deferral_target = deferral;
    cfg.ece_scheme = ctx.rc.ece_scheme();
    const auto rows = compare_methods(train, eval, methods, cfg);

    std::ostringstream csv;
    write_comment_block(csv, ctx.metadata());
    csv << "method,n,errors,accuracy,ece,auc,capture,deferral_rate,automated_error_rate,threshold\n";
    for (const auto& r : rows) {
        csv << to_string(r.method) << ',' << r.n << ',' << r.errors << ',' << format_double(r.accuracy) << ','
            << format_double(r.ece_overall) << ',' << (r.auc ? format_double(*r.auc) : std::string()) << ','
            << format_double(r.error_capture) << ',' << format_double(r.deferral_rate) << ','
            << format_double(r.automated_error_rate) << ',' << format_double(r.threshold) << '\n';
    }
    ctx.emit(out_path, csv.str());
    return kExitOk;
}

int cmd_sample_size(Context& ctx, double lambda, double t, double delta) {
    const ConcentrationReport r = concentration_report(lambda, t, delta);
    ojson j;
    j["lambda"] = r.lambda;
    j["t"] = r.t;
    j["delta"] = r.delta;
    j["sigma2"] = r.sigma2;
    j["tail_coefficient"] = r.tail_coefficient;
    j["tail_bound"] = r.tail_bound;
    j["sigma2_naive"] = r.sigma2_naive;
    j["n_ours"] = r.n_ours;
    j["n_naive"] = r.n_naive;
    ctx.out << dump(j);
    return kExitOk;
}

int cmd_simulate(Context& ctx, std::size_t n, std::size_t c, double temperature, double concentration,
                 const std::string& out_path) {
    ctx.params["n"] = n;
    ctx.params["c"] = c;
    ctx.params["temperature"] = temperature;
    ctx.params["concentration"] = concentration;
    SyntheticSpec spec;
    spec.n = n;
    spec.c = c;
    spec.true_map = temperature_distortion(c, temperature);
    spec.concentration = concentration;
    spec.seed = ctx.rc.seed;
    const LabeledDataset data = generate_synthetic(spec);
    std::ostringstream csv;
    write_dataset_csv(csv, data, ctx.metadata());
    ctx.emit(out_path, csv.str());
    return kExitOk;
}

int cmd_cross_validate(Context& ctx, const std::string& data_path, std::size_t k, const std::string& out_path) {
    ctx.add_input("data", data_path);
    ctx.params["k"] = k;
    const LabeledDataset data = read_dataset_csv(data_path);
    PipelineConfig cfg;
    cfg.fit = ctx.rc.fit_config();
    cfg.reliability_lambda = ctx.rc.reliability_lambda;
    cfg.alpha = ctx.rc.alpha;
    cfg.rule = ctx.rc.rule();
    const CrossValidationReport report = cross_validate(data, k, cfg, ctx.rc.seed);

    std::ostringstream csv;
    write_comment_block(csv, ctx.metadata());
    csv << "fold,train_size,test_size,status,missing_class,tau_star,overall_error_rate,automated_error_rate,"
           "error_capture,deferral_rate\n";
    for (const auto& f : report.folds) {
        csv << f.fold << ',' << f.train_size << ',' << f.test_size << ',' << to_string(f.status) << ','
            << (f.missing_class ? 1 : 0) << ',' << format_double(f.tau_star) << ','
            << format_double(f.overall_error_rate) << ',' << format_double(f.automated_error_rate) << ','
            << format_double(f.error_capture) << ',' << format_double(f.deferral_rate) << '\n';
    }
    ctx.emit(out_path, csv.str());

    const auto stat = [](const SummaryStat& s) { return ojson{{"mean", s.mean}, {"sd", s.sd}}; };
    ojson summary;
    summary["folds"] = report.folds.size();
    summary["overall_error"] = stat(report.overall_error);
    summary["automated_error"] = stat(report.automated_error);
    summary["error_capture"] = stat(report.error_capture);
    summary["deferral_rate"] = stat(report.deferral_rate);
    summary["missing_class_warning"] = report.any_missing_class;
    if (report.any_missing_class) ctx.err << "warning: at least one training fold lacks a class\n";
    if (!out_path.empty()) ctx.out << dump(summary);
    return kExitOk;
}

int cmd_audit(Context& ctx, std::size_t c, double epsilon, double norm_a, double norm_b, std::size_t trials) {
    const TheoryConstants k = TheoryConstants::derive(c, epsilon, norm_a, norm_b, ctx.rc.lambda1, ctx.rc.lambda2);
    const TheoryAudit audit = theory_audit(k, trials, ctx.rc.seed);
    ojson j;
    j["c"] = c;
    j["epsilon"] = epsilon;
    j["M_A"] = norm_a;
    j["M_b"] = norm_b;
    j["B_z"] = audit.constants.B_z;
    j["B_cal"] = audit.constants.B_cal;
    j["M"] = audit.constants.M;
    j["mu"] = audit.constants.mu;
    j["trials"] = trials;
    j["hessian_floor"] = epsilon * epsilon;
    j["hessian_min_eigenvalue"] = nullable(audit.hessian_min_eigenvalue);
    j["hessian_violations"] = audit.hessian_violations;
    j["loss_max"] = audit.loss_max;
    j["loss_violations"] = audit.loss_violations;
    j["closed_form_error"] = audit.closed_form_error;
    j["passed"] = audit.passed();
    ctx.out << dump(j);
    return audit.passed() ? kExitOk : kExitInternal;
}

}  // namespace

int exit_code_for(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::NoFeasibleThreshold:
        case ErrorKind::NotPositiveDefinite:
            return kExitInfeasible;
        case ErrorKind::NumericalUnderflow:
            return kExitInternal;
        default:
            return kExitInput;
    }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Geometric calibration and reliability-based deferral for multi-class classifiers", "geocal"};
    app.set_version_flag("--version", fmt::format("{} {}", kToolName, kToolVersion));
    app.require_subcommand(1);

    Context ctx{out, err, {}, {}};
    std::function<int()> action;

    std::string data_path;
    std::string model_path;
    std::string eval_path;
    std::string out_path;

    auto* fit = app.add_subcommand("fit", "Fit the calibration map and deferral threshold");
    add_run_config(fit, ctx.rc);
    fit->add_option("--data", data_path, "Training CSV")->required();
    fit->add_option("--out", out_path, "Model JSON path")->required();
    fit->callback([&] { action = [&] { return cmd_fit(ctx, data_path, out_path); }; });

    auto* apply = app.add_subcommand("apply", "Calibrate rows and decide automate or defer");
    add_run_config(apply, ctx.rc);
    apply->add_option("--model", model_path, "Model JSON")->required();
    apply->add_option("--data", data_path, "Input CSV (label column optional)")->required();
    apply->add_option("--out", out_path, "Output CSV (stdout when omitted)");
    apply->callback([&] { action = [&] { return cmd_apply(ctx, model_path, data_path, out_path); }; });

    std::string diagram_mode = "equal_count";
    std::size_t diagram_bins = 10;
    auto* evaluate = app.add_subcommand("evaluate", "Metrics, reliability diagrams and error-detection curves");
    add_run_config(evaluate, ctx.rc);
    evaluate->add_option("--data", data_path, "Labeled CSV")->required();
    evaluate->add_option("--model", model_path, "Model JSON; raw probabilities are scored when omitted");
    evaluate->add_option("--out-dir", out_path, "Directory for report.json, diagram.csv, roc.csv, pr.csv")
        ->required();
    evaluate->add_option("--diagram-bin-mode", diagram_mode)->check(CLI::IsMember({"equal_width", "equal_count"}));
    evaluate->add_option("--diagram-bins", diagram_bins);
    evaluate->callback([&] {
        action = [&] { return cmd_evaluate(ctx, data_path, model_path, out_path, diagram_mode, diagram_bins); };
    });

    auto* pareto = app.add_subcommand("pareto", "Automated error rate against deferral rate");
    add_run_config(pareto, ctx.rc);
    pareto->add_option("--data", data_path, "Labeled CSV")->required();
    pareto->add_option("--model", model_path, "Model JSON");
    pareto->add_option("--out", out_path, "Output CSV (stdout when omitted)");
    pareto->callback([&] { action = [&] { return cmd_pareto(ctx, data_path, model_path, out_path); }; });

    std::vector<std::size_t> sizes{100, 250, 500, 750, 1000};
    std::size_t replicates = 1000;
    bool recovery = false;
    std::size_t sim_c = 3;
    double temperature = 1.0;
    double concentration = 1.0;
    auto* bootstrap = app.add_subcommand("bootstrap", "Subsampling convergence table and log-log rate");
    add_run_config(bootstrap, ctx.rc);
    bootstrap->add_option("--data", data_path, "Labeled CSV");
    bootstrap->add_option("--sizes", sizes, "Subsample sizes")->delimiter(',');
    bootstrap->add_option("--replicates", replicates);
    bootstrap->add_flag("--recovery", recovery, "Measure fresh synthetic fits against the known distortion");
    bootstrap->add_option("--c", sim_c, "Classes for --recovery");
    bootstrap->add_option("--temperature", temperature, "Distortion temperature for --recovery");
    bootstrap->add_option("--concentration", concentration, "Score concentration for --recovery");
    bootstrap->add_option("--out", out_path, "Output CSV (stdout when omitted)");
    bootstrap->callback([&] {
        action = [&] {
            return cmd_bootstrap(ctx, data_path, recovery, sizes, replicates, sim_c, temperature, concentration,
                                 out_path);
        };
    });

    std::vector<std::string> method_names;
    for (Method m : kAllMethods) method_names.emplace_back(to_string(m));
    double deferral = 0.345;
    auto* compare = app.add_subcommand("compare", "Post-hoc calibrators at a common deferral rate");
    add_run_config(compare, ctx.rc);
    compare->add_option("--data", data_path, "Training CSV")->required();
    compare->add_option("--eval", eval_path, "Evaluation CSV (training data when omitted)");
    compare->add_option("--methods", method_names)->delimiter(',');
    compare->add_option("--deferral", deferral, "Target deferral rate");
    compare->add_option("--out", out_path, "Output CSV (stdout when omitted)");
    compare->callback([&] {
        action = [&] { return cmd_compare(ctx, data_path, eval_path, method_names, deferral, out_path); };
    });

    double ss_lambda = 1.0;
    double ss_t = 0.1;
    double ss_delta = 0.01;
    auto* sample_size = app.add_subcommand("sample-size", "Validation sample size from the reliability tail bound");
    sample_size->add_option("--lambda", ss_lambda);
    sample_size->add_option("--t", ss_t, "Deviation");
    sample_size->add_option("--delta", ss_delta, "Failure probability");
    sample_size->callback([&] { action = [&] { return cmd_sample_size(ctx, ss_lambda, ss_t, ss_delta); }; });

    std::size_t sim_n = 1000;
    auto* simulate = app.add_subcommand("simulate", "Write a synthetic labeled CSV");
    add_run_config(simulate, ctx.rc);
    simulate->add_option("--n", sim_n);
    simulate->add_option("--c", sim_c);
    simulate->add_option("--temperature", temperature, "Observed logits are the true ones times this");
    simulate->add_option("--concentration", concentration);
    simulate->add_option("--out", out_path, "Output CSV (stdout when omitted)");
    simulate->callback([&] {
        action = [&] { return cmd_simulate(ctx, sim_n, sim_c, temperature, concentration, out_path); };
    });

    std::size_t folds = 5;
    auto* cv = app.add_subcommand("cross-validate", "Stratified k-fold evaluation of the full pipeline");
    add_run_config(cv, ctx.rc);
    cv->add_option("--data", data_path, "Labeled CSV")->required();
    cv->add_option("--k", folds);
    cv->add_option("--out", out_path, "Per-fold CSV (stdout when omitted)");
    cv->callback([&] { action = [&] { return cmd_cross_validate(ctx, data_path, folds, out_path); }; });

    double audit_eps = 0.05;
    double norm_a = 1.0;
    double norm_b = 0.0;
    std::size_t trials = 10000;
    auto* audit = app.add_subcommand("audit", "Numerical check of the softmax-Hessian floor and the loss bound");
    add_run_config(audit, ctx.rc);
    audit->add_option("--c", sim_c);
    audit->add_option("--input-floor", audit_eps, "Lower bound on input probabilities");
    audit->add_option("--norm-a", norm_a, "Frobenius bound on A");
    audit->add_option("--norm-b", norm_b, "Euclidean bound on b");
    audit->add_option("--trials", trials);
    audit->callback([&] { action = [&] { return cmd_audit(ctx, sim_c, audit_eps, norm_a, norm_b, trials); }; });

    std::vector<const char*> argv{"geocal"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInput;
    }

    for (const auto* sub : app.get_subcommands()) ctx.command = sub->get_name();
    try {
        return action();
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run_cli(args, std::cout, std::cerr);
}

}  // namespace geocal

#include "geocal/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "geocal/baselines.hpp"
#include "geocal/error.hpp"
#include "geocal/rng.hpp"

namespace geocal {
namespace {

// Runs fn(i) for i in [0, count) on up to `workers` threads. Each task writes
// only its own output slot, so results do not depend on scheduling.
template <class Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

SummaryStat summarize(const std::vector<double>& values) {
    SummaryStat s;
    if (values.empty()) return s;
    const double n = static_cast<double>(values.size());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.sd = std::sqrt(ss / (n - 1.0));
    }
    return s;
}

// Per-replicate distances laid out as [size index][replicate]; NaN marks a failed fit.
ConvergenceTable tabulate(const std::vector<std::size_t>& sizes, std::size_t replicates,
                          const std::vector<double>& distances) {
    ConvergenceTable table;
    table.sizes = sizes;
    table.replicates = replicates;
    for (std::size_t s = 0; s < sizes.size(); ++s) {
        std::vector<double> ok;
        std::size_t failed = 0;
        for (std::size_t r = 0; r < replicates; ++r) {
            const double d = distances[s * replicates + r];
            if (std::isnan(d)) {
                ++failed;
            } else {
                ok.push_back(d);
            }
        }
        if (ok.empty()) {
            throw Error(ErrorKind::InsufficientData,
                        "every replicate failed to fit at size " + std::to_string(sizes[s]));
        }
        const SummaryStat stat = summarize(ok);
        table.mean_error.push_back(stat.mean);
        table.sd_error.push_back(stat.sd);
        table.failures.push_back(failed);
    }
    return table;
}

void check_bootstrap_options(const BootstrapOptions& options) {
    require(!options.sizes.empty(), ErrorKind::InvalidArgument, "at least one subsample size is required");
    require(options.replicates >= 1, ErrorKind::InvalidArgument, "replicates must be at least 1");
    for (std::size_t s : options.sizes) require(s >= 1, ErrorKind::InvalidArgument, "subsample sizes must be positive");
    options.fit.validate();
}

// First k entries of a seeded partial Fisher-Yates shuffle of [0, n), sorted.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.index(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

double error_rate(const std::vector<bool>& correct) {
    if (correct.empty()) return 0.0;
    const auto wrong = std::count(correct.begin(), correct.end(), false);
    return static_cast<double>(wrong) / static_cast<double>(correct.size());
}

// Error rate among samples with score >= tau; 0 when none are kept.
double automated_error(std::span<const double> scores, const std::vector<bool>& correct, double tau) {
    std::size_t kept = 0;
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i] < tau) continue;
        ++kept;
        if (!correct[i]) ++wrong;
    }
    return kept == 0 ? 0.0 : static_cast<double>(wrong) / static_cast<double>(kept);
}

// Random interior vector with every entry >= epsilon. Odd trials push mass
// toward a vertex so that the lower bounds are approached.
ProbVector random_interior(std::size_t c, double epsilon, Rng& rng, bool spiky) {
    std::vector<double> g(c);
    double sum = 0.0;
    for (double& v : g) {
        v = rng.exponential();
        if (spiky) v = std::pow(v, 6.0);
        sum += v;
    }
    const double free_mass = 1.0 - static_cast<double>(c) * epsilon;
    for (double& v : g) v = epsilon + free_mass * v / sum;
    return normalize(g);
}

}  // namespace

void SyntheticSpec::validate() const {
    require(n >= 1, ErrorKind::InvalidArgument, "synthetic n must be at least 1");
    require(c >= 2, ErrorKind::InvalidArgument, "synthetic c must be at least 2");
    require(true_map.c == c, ErrorKind::DimensionMismatch, "true_map class count differs from c");
    true_map.validate();
    require(concentration > 0.0 && std::isfinite(concentration), ErrorKind::InvalidArgument,
            "concentration must be positive");
}

CalibrationModel temperature_distortion(std::size_t c, double temperature) {
    require(temperature > 0.0 && std::isfinite(temperature), ErrorKind::InvalidArgument,
            "temperature must be positive");
    CalibrationModel m = CalibrationModel::identity(c);
    m.A /= temperature;
    return m;
}

LabeledDataset generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    const std::size_t c = spec.c;
    const std::size_t d = c - 1;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(spec.true_map.A);
    require(lu.isInvertible(), ErrorKind::InvalidArgument, "true_map.A must be invertible");
    const Eigen::MatrixXd a_inv = lu.inverse();

    std::vector<Eigen::VectorXd> anchors;
    for (std::size_t k = 0; k < c; ++k) {
        std::vector<double> a(c, (1.0 - kAnchorMass) / static_cast<double>(c - 1));
        a[k] = kAnchorMass;
        const AlrVector z = alr(ProbVector(a));
        anchors.emplace_back(Eigen::Map<const Eigen::VectorXd>(z.values().data(), static_cast<Eigen::Index>(d)));
    }

    Rng rng(spec.seed);
    LabeledDataset data(c);
    Eigen::VectorXd z(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < spec.n; ++i) {
        const auto k = static_cast<std::size_t>(rng.index(c));
        for (std::size_t j = 0; j < d; ++j) {
            z[static_cast<Eigen::Index>(j)] = anchors[k][static_cast<Eigen::Index>(j)] + rng.normal() / spec.concentration;
        }
        const ProbVector q = alr_inverse(std::span<const double>(z.data(), d));

        const double u = rng.uniform();
        std::size_t label = c - 1;
        double cum = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            cum += q[j];
            if (u < cum) {
                label = j;
                break;
            }
        }

        const Eigen::VectorXd z_obs = a_inv * (z - spec.true_map.b);
        ProbVector p = alr_inverse(std::span<const double>(z_obs.data(), d));
        if (std::any_of(p.values().begin(), p.values().end(), [](double v) { return v <= 0.0; })) {
            p = clip(p, InteriorConfig{1e-300});
        }
        data.add(std::move(p), label);
    }
    return data;
}

ConvergenceTable bootstrap_convergence(const LabeledDataset& data, const BootstrapOptions& options) {
    check_bootstrap_options(options);
    for (std::size_t s : options.sizes) {
        if (s > data.size()) {
            throw Error(ErrorKind::InvalidArgument, "subsample size " + std::to_string(s) + " exceeds the " +
                                                        std::to_string(data.size()) + " available rows");
        }
    }
    const CalibrationModel reference = fit_geometric(data, options.fit);

    const std::size_t reps = options.replicates;
    std::vector<double> distances(options.sizes.size() * reps);
    parallel_for(distances.size(), options.workers, [&](std::size_t task) {
        const std::size_t size = options.sizes[task / reps];
        const std::size_t rep = task % reps;
        Rng rng(derive_seed(options.seed, {size, rep}));
        const LabeledDataset sub = data.subset(sample_without_replacement(data.size(), size, rng));
        try {
            distances[task] = parameter_distance(fit_geometric(sub, options.fit), reference);
        } catch (const Error&) {
            distances[task] = std::numeric_limits<double>::quiet_NaN();
        }
    });
    return tabulate(options.sizes, reps, distances);
}

ConvergenceTable recovery_convergence(const SyntheticSpec& spec, const BootstrapOptions& options) {
    check_bootstrap_options(options);
    spec.validate();

    const std::size_t reps = options.replicates;
    std::vector<double> distances(options.sizes.size() * reps);
    parallel_for(distances.size(), options.workers, [&](std::size_t task) {
        const std::size_t size = options.sizes[task / reps];
        const std::size_t rep = task % reps;
        SyntheticSpec local = spec;
        local.n = size;
        local.seed = derive_seed(options.seed, {size, rep});
        const LabeledDataset sample = generate_synthetic(local);
        try {
            distances[task] = parameter_distance(fit_geometric(sample, options.fit), spec.true_map);
        } catch (const Error&) {
            distances[task] = std::numeric_limits<double>::quiet_NaN();
        }
    });
    return tabulate(options.sizes, reps, distances);
}

RateFit fit_rate_slope(const std::vector<std::size_t>& sizes, const std::vector<double>& errors) {
    require(sizes.size() == errors.size(), ErrorKind::DimensionMismatch, "sizes and errors differ in length");
    require(sizes.size() >= 3, ErrorKind::InvalidArgument, "rate fit needs at least 3 sizes");
    const std::size_t m = sizes.size();
    std::vector<double> x(m);
    std::vector<double> y(m);
    for (std::size_t i = 0; i < m; ++i) {
        require(sizes[i] > 0, ErrorKind::InvalidArgument, "sizes must be positive");
        if (!(errors[i] > 0.0) || !std::isfinite(errors[i])) {
            throw Error(ErrorKind::InvalidArgument, "mean error at size " + std::to_string(sizes[i]) +
                                                        " is not positive");
        }
        x[i] = std::log(static_cast<double>(sizes[i]));
        y[i] = std::log(errors[i]);
    }
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(m);
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(m);
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    require(sxx > 0.0, ErrorKind::InvalidArgument, "rate fit needs at least two distinct sizes");

    RateFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double r = y[i] - fit.intercept - fit.slope * x[i];
        ssr += r * r;
    }
    fit.std_error = std::sqrt(ssr / static_cast<double>(m - 2) / sxx);
    fit.ci_low = fit.slope - 1.959963984540054 * fit.std_error;
    fit.ci_high = fit.slope + 1.959963984540054 * fit.std_error;
    return fit;
}

RateFit fit_rate_slope(const ConvergenceTable& table) { return fit_rate_slope(table.sizes, table.mean_error); }

std::string_view to_string(FoldStatus status) noexcept {
    switch (status) {
        case FoldStatus::Ok: return "ok";
        case FoldStatus::Infeasible: return "infeasible";
        case FoldStatus::FitFailed: return "fit_failed";
    }
    return "unknown";
}

std::vector<std::size_t> stratified_folds(const LabeledDataset& data, std::size_t k, std::uint64_t seed) {
    require(k >= 2, ErrorKind::InvalidArgument, "cross-validation needs k >= 2");
    if (data.size() < k) {
        throw Error(ErrorKind::InvalidArgument, "cross-validation with k = " + std::to_string(k) + " needs at least " +
                                                    std::to_string(k) + " rows");
    }
    std::vector<std::vector<std::size_t>> by_label(data.classes());
    for (std::size_t i = 0; i < data.size(); ++i) by_label[data[i].label].push_back(i);

    std::vector<std::size_t> fold(data.size());
    std::size_t position = 0;
    for (std::size_t label = 0; label < by_label.size(); ++label) {
        auto& rows = by_label[label];
        Rng rng(derive_seed(seed, {label}));
        for (std::size_t i = rows.size(); i > 1; --i) {
            std::swap(rows[i - 1], rows[static_cast<std::size_t>(rng.index(i))]);
        }
        for (std::size_t r : rows) fold[r] = position++ % k;
    }
    return fold;
}

CrossValidationReport cross_validate(const LabeledDataset& data, std::size_t k, const PipelineConfig& cfg,
                                     std::uint64_t seed) {
    cfg.fit.validate();
    require(cfg.reliability_lambda > 0.0, ErrorKind::InvalidArgument, "reliability lambda must be positive");
    require(cfg.alpha > 0.0 && cfg.alpha < 1.0, ErrorKind::InvalidArgument, "alpha must lie in (0, 1)");
    const std::vector<std::size_t> fold_of = stratified_folds(data, k, seed);

    CrossValidationReport report;
    std::vector<double> overall;
    std::vector<double> automated;
    std::vector<double> capture;
    std::vector<double> deferral;
    for (std::size_t f = 0; f < k; ++f) {
        std::vector<std::size_t> train_idx;
        std::vector<std::size_t> test_idx;
        for (std::size_t i = 0; i < data.size(); ++i) (fold_of[i] == f ? test_idx : train_idx).push_back(i);
        const LabeledDataset train = data.subset(train_idx);
        const LabeledDataset test = data.subset(test_idx);

        FoldResult r;
        r.fold = f;
        r.train_size = train.size();
        r.test_size = test.size();
        std::vector<bool> seen(data.classes(), false);
        for (const auto& row : train.rows()) seen[row.label] = true;
        r.missing_class = std::find(seen.begin(), seen.end(), false) != seen.end();
        report.any_missing_class = report.any_missing_class || r.missing_class;

        std::optional<CalibrationModel> model;
        try {
            model = fit_geometric(train, cfg.fit);
        } catch (const Error&) {
            r.status = FoldStatus::FitFailed;
        }
        if (model) {
            const auto train_cal = apply_calibration(*model, train.probabilities());
            const auto train_scores = reliability_scores(train_cal, cfg.reliability_lambda);
            try {
                r.tau_star = fit_threshold(train_scores, correctness(train_cal, train.labels()), cfg.alpha, cfg.rule);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::NoFeasibleThreshold) throw;
                r.status = FoldStatus::Infeasible;
                r.tau_star = std::numeric_limits<double>::infinity();
            }
            const auto test_cal = apply_calibration(*model, test.probabilities());
            const auto test_scores = reliability_scores(test_cal, cfg.reliability_lambda);
            const auto test_correct = correctness(test_cal, test.labels());
            r.overall_error_rate = error_rate(test_correct);
            r.automated_error_rate = automated_error(test_scores, test_correct, r.tau_star);
            r.error_capture = error_capture(test_scores, test_correct, r.tau_star);
            r.deferral_rate = deferral_rate(test_scores, r.tau_star);
            overall.push_back(r.overall_error_rate);
            automated.push_back(r.automated_error_rate);
            capture.push_back(r.error_capture);
            deferral.push_back(r.deferral_rate);
        }
        report.folds.push_back(r);
    }
    report.overall_error = summarize(overall);
    report.automated_error = summarize(automated);
    report.error_capture = summarize(capture);
    report.deferral_rate = summarize(deferral);
    return report;
}

std::string_view to_string(Method method) noexcept {
    switch (method) {
        case Method::Uncalibrated: return "uncalibrated";
        case Method::Temperature: return "temperature";
        case Method::PlattOvR: return "platt_ovr";
        case Method::Isotonic: return "isotonic";
        case Method::Geometric: return "geometric";
    }
    return "unknown";
}

Method parse_method(std::string_view name) {
    for (Method m : kAllMethods) {
        if (name == to_string(m)) return m;
    }
    if (name == "platt") return Method::PlattOvR;
    throw Error(ErrorKind::InvalidArgument, "unknown method '" + std::string(name) + "'");
}

double threshold_for_deferral(std::span<const double> scores, double target) {
    require(!scores.empty(), ErrorKind::EmptyDataset, "threshold search needs at least one score");
    require(target >= 0.0 && target <= 1.0, ErrorKind::InvalidArgument, "deferral target must lie in [0, 1]");
    std::vector<double> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());

    // Threshold sorted[i] (first of its run) defers exactly i samples.
    double best_tau = sorted.front();
    double best_gap = std::abs(0.0 - target);
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i] == sorted[i - 1]) continue;
        const double gap = std::abs(static_cast<double>(i) / n - target);
        if (gap < best_gap) {
            best_gap = gap;
            best_tau = sorted[i];
        }
    }
    if (std::abs(1.0 - target) < best_gap) {
        best_tau = std::nextafter(sorted.back(), std::numeric_limits<double>::infinity());
    }
    return best_tau;
}

std::vector<MethodRow> compare_methods(const LabeledDataset& train, const LabeledDataset& eval,
                                       const std::vector<Method>& methods, const CompareConfig& cfg) {
    require(!train.empty() && !eval.empty(), ErrorKind::EmptyDataset, "comparison needs nonempty data");
    require(train.classes() == eval.classes(), ErrorKind::DimensionMismatch,
            "training and evaluation data differ in class count");
    require(cfg.reliability_lambda > 0.0, ErrorKind::InvalidArgument, "reliability lambda must be positive");
    cfg.fit.validate();

    const std::vector<ProbVector> raw = eval.probabilities();
    const std::vector<std::size_t> labels = eval.labels();
    std::vector<MethodRow> rows;
    for (Method method : methods) {
        std::vector<ProbVector> cal;
        switch (method) {
            case Method::Uncalibrated:
                cal = raw;
                break;
            case Method::Temperature:
            case Method::PlattOvR:
            case Method::Isotonic: {
                const BaselineKind kind = method == Method::Temperature ? BaselineKind::Temperature
                                          : method == Method::PlattOvR ? BaselineKind::PlattOvR
                                                                       : BaselineKind::Isotonic;
                const BaselineModel model = fit_baseline(kind, train, cfg.fit.interior);
                cal.reserve(raw.size());
                for (const auto& p : raw) cal.push_back(baseline_apply(model, p));
                break;
            }
            case Method::Geometric:
                cal = apply_calibration(fit_geometric(train, cfg.fit), raw);
                break;
        }

        MethodRow row;
        row.method = method;
        row.n = cal.size();
        const std::vector<bool> correct = correctness(cal, labels);
        row.errors = static_cast<std::size_t>(std::count(correct.begin(), correct.end(), false));
        row.accuracy = 1.0 - static_cast<double>(row.errors) / static_cast<double>(row.n);
        row.ece_overall = ece(cal, labels, EceMode::Overall(), cfg.ece_scheme);
        const std::vector<double> scores = reliability_scores(cal, cfg.reliability_lambda);
        try {
            row.auc = error_detection_auc(scores, correct);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::UndefinedAUC) throw;
        }
        row.threshold = threshold_for_deferral(scores, cfg.deferral_target);
        row.error_capture = error_capture(scores, correct, row.threshold);
        row.deferral_rate = deferral_rate(scores, row.threshold);
        row.automated_error_rate = automated_error(scores, correct, row.threshold);
        rows.push_back(row);
    }
    return rows;
}

TheoryConstants TheoryConstants::derive(std::size_t c, double epsilon, double M_A, double M_b, double lambda1,
                                        double lambda2) {
    require(c >= 2, ErrorKind::InvalidArgument, "c must be at least 2");
    require(epsilon > 0.0 && epsilon < 1.0 / static_cast<double>(c), ErrorKind::InvalidArgument,
            "epsilon must lie in (0, 1/c)");
    require(M_A >= 0.0 && M_b >= 0.0, ErrorKind::InvalidArgument, "norm bounds must be nonnegative");
    require(lambda1 > 0.0 && lambda2 > 0.0, ErrorKind::InvalidArgument, "penalty weights must be positive");
    TheoryConstants t;
    t.c = c;
    t.epsilon = epsilon;
    t.M_A = M_A;
    t.M_b = M_b;
    t.lambda1 = lambda1;
    t.lambda2 = lambda2;
    const double cm1 = static_cast<double>(c - 1);
    t.B_z = std::log((1.0 - cm1 * epsilon) / epsilon);
    t.B_cal = M_A * t.B_z * std::sqrt(cm1) + M_b;
    t.M = std::log(static_cast<double>(c)) + 2.0 * t.B_cal;
    t.mu = std::min(2.0 * lambda1, 2.0 * lambda2);
    return t;
}

double softmax_hessian_min_eigenvalue(const ProbVector& p) {
    const auto d = static_cast<Eigen::Index>(p.size() - 1);
    const Eigen::Map<const Eigen::VectorXd> head(p.values().data(), d);
    const Eigen::MatrixXd h = Eigen::MatrixXd(head.asDiagonal()) - head * head.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

TheoryAudit theory_audit(const TheoryConstants& constants, std::size_t trials, std::uint64_t seed) {
    const TheoryConstants k = TheoryConstants::derive(constants.c, constants.epsilon, constants.M_A, constants.M_b,
                                                      constants.lambda1, constants.lambda2);
    TheoryAudit audit;
    audit.constants = k;
    audit.trials = trials;

    // Closed forms, recomputed along a different arithmetic path.
    const double cm1 = static_cast<double>(k.c - 1);
    const double bz = std::log1p(-cm1 * k.epsilon) - std::log(k.epsilon);
    const double bcal = k.M_b + std::sqrt(cm1) * bz * k.M_A;
    const double m = -std::log(std::exp(-2.0 * bcal) / static_cast<double>(k.c));
    const double mu = 2.0 * std::min(k.lambda1, k.lambda2);
    for (double diff : {bz - k.B_z, bcal - k.B_cal, m - k.M, mu - k.mu}) {
        audit.closed_form_error = std::max(audit.closed_form_error, std::abs(diff) / std::max(1.0, std::abs(m)));
    }

    const std::size_t c = k.c;
    const auto d = static_cast<Eigen::Index>(c - 1);
    const double floor = k.epsilon * k.epsilon;
    Rng rng(seed);
    audit.hessian_min_eigenvalue = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < trials; ++t) {
        const ProbVector p = random_interior(c, k.epsilon, rng, t % 2 == 1);
        const double lam = softmax_hessian_min_eigenvalue(p);
        audit.hessian_min_eigenvalue = std::min(audit.hessian_min_eigenvalue, lam);
        if (lam < floor - 1e-12) ++audit.hessian_violations;
    }

    for (std::size_t t = 0; t < trials; ++t) {
        Eigen::MatrixXd a(d, d);
        for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
        Eigen::VectorXd b(d);
        for (Eigen::Index i = 0; i < d; ++i) b[i] = rng.normal();
        // Half the trials sit on the boundary of the norm balls.
        const double ra = t % 2 == 0 ? k.M_A : k.M_A * rng.uniform();
        const double rb = t % 2 == 0 ? k.M_b : k.M_b * rng.uniform();
        a *= a.norm() > 0.0 ? ra / a.norm() : 0.0;
        b *= b.norm() > 0.0 ? rb / b.norm() : 0.0;

        const ProbVector p = random_interior(c, k.epsilon, rng, t % 4 >= 2);
        const AlrVector z = alr(p);
        const Eigen::VectorXd zc = a * Eigen::Map<const Eigen::VectorXd>(z.values().data(), d) + b;
        // Per-sample loss for label y is -log softmax(zc, 0)_y.
        double top = 0.0;
        for (Eigen::Index i = 0; i < d; ++i) top = std::max(top, zc[i]);
        double sum = std::exp(-top);
        for (Eigen::Index i = 0; i < d; ++i) sum += std::exp(zc[i] - top);
        const double log_norm = top + std::log(sum);
        double worst = log_norm;  // reference class, logit 0
        for (Eigen::Index i = 0; i < d; ++i) worst = std::max(worst, log_norm - zc[i]);
        audit.loss_max = std::max(audit.loss_max, worst);
        if (worst > k.M + 1e-12) ++audit.loss_violations;
    }
    return audit;
}

}  // namespace geocal

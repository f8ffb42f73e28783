#pragma once

// Experiments built on the calibration pipeline: synthetic data with a known
// distortion, subsampling convergence and its log-log rate, stratified
// cross-validation, method comparison at a fixed deferral rate, and numerical
// audits of the softmax-Hessian floor and the bounded loss.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geocal/calibration.hpp"
#include "geocal/dataset.hpp"
#include "geocal/diagnostics.hpp"
#include "geocal/reliability.hpp"

namespace geocal {

struct SyntheticSpec {
    std::size_t n = 1000;
    std::size_t c = 3;
    // Distortion to be recovered: observations are the inverse map applied to
    // the label-generating probabilities.
    CalibrationModel true_map = CalibrationModel::identity(3);
    // Raw ALR scores are the class anchor plus N(0, I) / concentration.
    double concentration = 1.0;
    std::uint64_t seed = 42;

    void validate() const;
};

// Probability placed on the latent class by its anchor vector.
inline constexpr double kAnchorMass = 0.6;

LabeledDataset generate_synthetic(const SyntheticSpec& spec);

// Map whose inverse sharpens ALR coordinates by a factor of temperature,
// i.e. observed logits are the true ones multiplied by temperature.
CalibrationModel temperature_distortion(std::size_t c, double temperature);

struct ConvergenceTable {
    std::vector<std::size_t> sizes;
    std::vector<double> mean_error;
    std::vector<double> sd_error;
    std::vector<std::size_t> failures;  // replicates whose fit threw
    std::size_t replicates = 0;
};

struct BootstrapOptions {
    std::vector<std::size_t> sizes{100, 250, 500, 750, 1000};
    std::size_t replicates = 1000;
    FitConfig fit{};
    std::uint64_t seed = 42;
    std::size_t workers = 1;
};

// Distance of subsample fits to the full-sample fit, subsampling without replacement.
ConvergenceTable bootstrap_convergence(const LabeledDataset& data, const BootstrapOptions& options);

// Distance of fits on fresh synthetic draws of each size to spec.true_map.
// spec.n and spec.seed are replaced per replicate.
ConvergenceTable recovery_convergence(const SyntheticSpec& spec, const BootstrapOptions& options);

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double std_error = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

// OLS of log(error) on log(size); 95% normal interval from the slope's standard error.
RateFit fit_rate_slope(const std::vector<std::size_t>& sizes, const std::vector<double>& errors);
RateFit fit_rate_slope(const ConvergenceTable& table);

struct PipelineConfig {
    FitConfig fit{};
    double reliability_lambda = 1.0;
    double alpha = 0.05;
    ThresholdRule rule = ThresholdRule::Smallest;
};

enum class FoldStatus { Ok, Infeasible, FitFailed };

std::string_view to_string(FoldStatus status) noexcept;

struct FoldResult {
    std::size_t fold = 0;
    std::size_t train_size = 0;
    std::size_t test_size = 0;
    FoldStatus status = FoldStatus::Ok;
    bool missing_class = false;  // training split lacks at least one label
    double tau_star = 0.0;
    double overall_error_rate = 0.0;
    double automated_error_rate = 0.0;
    double error_capture = 0.0;
    double deferral_rate = 0.0;
};

struct SummaryStat {
    double mean = 0.0;
    double sd = 0.0;
};

struct CrossValidationReport {
    std::vector<FoldResult> folds;
    // Over folds whose fit succeeded.
    SummaryStat overall_error;
    SummaryStat automated_error;
    SummaryStat error_capture;
    SummaryStat deferral_rate;
    bool any_missing_class = false;
};

// Stratified k-fold: rows of each label are shuffled with the seed and dealt
// round-robin. An infeasible threshold defers the whole held-out fold.
CrossValidationReport cross_validate(const LabeledDataset& data, std::size_t k, const PipelineConfig& cfg,
                                     std::uint64_t seed);

// Folds assigned by cross_validate, one entry per row.
std::vector<std::size_t> stratified_folds(const LabeledDataset& data, std::size_t k, std::uint64_t seed);

enum class Method { Uncalibrated, Temperature, PlattOvR, Isotonic, Geometric };

std::string_view to_string(Method method) noexcept;
Method parse_method(std::string_view name);
inline constexpr Method kAllMethods[] = {Method::Uncalibrated, Method::Temperature, Method::PlattOvR,
                                         Method::Isotonic, Method::Geometric};

struct CompareConfig {
    FitConfig fit{};
    double reliability_lambda = 1.0;
    double deferral_target = 0.345;
    BinningScheme ece_scheme = kDefaultEceScheme;
};

struct MethodRow {
    Method method = Method::Uncalibrated;
    std::size_t n = 0;
    std::size_t errors = 0;
    double accuracy = 0.0;
    double ece_overall = 0.0;
    std::optional<double> auc;  // empty when the evaluation set has one correctness class
    double threshold = 0.0;
    double error_capture = 0.0;
    double deferral_rate = 0.0;
    double automated_error_rate = 0.0;
};

// Threshold whose deferral rate on the scores is closest to target; ties go to
// the smaller threshold.
double threshold_for_deferral(std::span<const double> scores, double target);

// Each method is fitted on train and evaluated on eval.
std::vector<MethodRow> compare_methods(const LabeledDataset& train, const LabeledDataset& eval,
                                       const std::vector<Method>& methods, const CompareConfig& cfg);

struct TheoryConstants {
    std::size_t c = 3;
    double epsilon = 0.1;
    double M_A = 1.0;
    double M_b = 0.0;
    double lambda1 = 0.01;
    double lambda2 = 0.01;
    double B_z = 0.0;
    double B_cal = 0.0;
    double M = 0.0;
    double mu = 0.0;

    // Requires c >= 2, epsilon in (0, 1/c), M_A, M_b >= 0, lambdas > 0.
    static TheoryConstants derive(std::size_t c, double epsilon, double M_A, double M_b, double lambda1 = 0.01,
                                  double lambda2 = 0.01);
};

struct TheoryAudit {
    TheoryConstants constants;
    std::size_t trials = 0;
    std::size_t hessian_violations = 0;
    double hessian_min_eigenvalue = 0.0;  // smallest over the trials
    std::size_t loss_violations = 0;
    double loss_max = 0.0;                // largest per-sample loss over the trials
    double closed_form_error = 0.0;       // largest deviation of derived fields from a recomputation
    bool passed() const noexcept { return hessian_violations == 0 && loss_violations == 0 && closed_form_error < 1e-12; }
};

// Minimum eigenvalue of diag(p_{1:c-1}) - p_{1:c-1} p_{1:c-1}^T.
double softmax_hessian_min_eigenvalue(const ProbVector& p);

TheoryAudit theory_audit(const TheoryConstants& constants, std::size_t trials, std::uint64_t seed);

}  // namespace geocal

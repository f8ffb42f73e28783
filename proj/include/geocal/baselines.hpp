#pragma once

// Reference post-hoc calibrators used for method comparisons: temperature
// scaling, one-vs-rest Platt scaling and one-vs-rest isotonic regression.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "geocal/dataset.hpp"
#include "geocal/simplex.hpp"

namespace geocal {

enum class BaselineKind { Temperature, PlattOvR, Isotonic };

std::string_view to_string(BaselineKind kind) noexcept;
BaselineKind parse_baseline_kind(std::string_view name);

struct PlattParams {
    double a = 1.0;
    double b = 0.0;
};

// Nondecreasing step function: value[k] applies on [thresholds[k], thresholds[k+1]).
// Inputs below the first threshold take the first value.
struct StepFunction {
    std::vector<double> thresholds;
    std::vector<double> values;

    double operator()(double x) const;
};

struct BaselineModel {
    BaselineKind kind = BaselineKind::Temperature;
    std::size_t c = 2;
    double epsilon = 1e-6;
    double temperature = 1.0;
    std::vector<PlattParams> platt;       // one per class
    std::vector<StepFunction> isotonic;   // one per class
};

inline constexpr double kMinTemperature = 0.05;
inline constexpr double kMaxTemperature = 20.0;

BaselineModel fit_baseline(BaselineKind kind, const LabeledDataset& data, const InteriorConfig& interior = {});
ProbVector baseline_apply(const BaselineModel& model, const ProbVector& p);

BaselineModel temperature_model(std::size_t c, double temperature, double epsilon = 1e-6);

// Penalized logistic fit of targets on scores s: sigma(a * s + b), minimizing
//   sum of log-loss + lambda_a * (a - 1)^2 + lambda_b * b^2
// by damped Newton iterations.
PlattParams fit_platt_binary(std::span<const double> scores, std::span<const int> targets, double lambda_a,
                             double lambda_b);

// Pool-adjacent-violators fit of targets (0/1 weights allowed) against x.
StepFunction fit_isotonic(std::span<const double> x, std::span<const double> y);

double logit(double p);
double sigmoid(double x);

}  // namespace geocal

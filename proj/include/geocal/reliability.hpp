#pragma once

// Geometric reliability scores R = exp(-lambda * d_FR(p, e_argmax)), the
// neutral-zone threshold and the Hoeffding-type concentration constants.

#include <cstddef>
#include <span>
#include <vector>

#include "geocal/simplex.hpp"

namespace geocal {

struct ReliabilityPolicy {
    double lambda = 1.0;
    double tau_star = 0.0;
    double alpha = 0.05;

    // lambda > 0, tau_star in (exp(-lambda*pi), 1], alpha in (0, 1).
    void validate() const;
};

enum class DecisionKind { Automate, Defer };

struct Decision {
    DecisionKind kind = DecisionKind::Defer;
    std::size_t predicted_class = 0;

    bool automated() const noexcept { return kind == DecisionKind::Automate; }
};

double reliability_score(const ProbVector& p_cal, double lambda);
std::vector<double> reliability_scores(std::span<const ProbVector> p_cal, double lambda);

// Which qualifying observed score becomes tau_star. A score qualifies when the
// kept set {score >= tau} has empirical error rate <= alpha. Smallest keeps
// the most samples; Largest is the literal supremum reading.
enum class ThresholdRule { Smallest, Largest };

// Throws NoFeasibleThreshold when no score qualifies.
double fit_threshold(std::span<const double> scores, const std::vector<bool>& correct, double alpha,
                     ThresholdRule rule = ThresholdRule::Smallest);

// Automate iff R >= tau_star; the neutral zone is the strict set R < tau_star.
Decision decide(double reliability, const ReliabilityPolicy& policy, std::size_t predicted_class = 0);
Decision decide(const ProbVector& p_cal, const ReliabilityPolicy& policy);

struct ConcentrationReport {
    double lambda = 1.0;
    double t = 0.1;
    double delta = 0.01;
    // (1 - exp(-lambda*pi))^2 / 4
    double sigma2 = 0.0;
    // 2 / (1 - exp(-lambda*pi))^2, the t^2 multiplier in the tail exponent
    double tail_coefficient = 0.0;
    // 2 * exp(-tail_coefficient * t^2)
    double tail_bound = 0.0;
    double sigma2_naive = 0.0;
    long long n_ours = 0;
    long long n_naive = 0;
};

ConcentrationReport concentration_report(double lambda, double t, double delta);

// Single-draw tail bound 2 exp(-2 t^2 / (1 - exp(-lambda*pi))^2).
double reliability_tail_bound(double lambda, double t);

}  // namespace geocal

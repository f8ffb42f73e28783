#include "geocal/reliability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "geocal/error.hpp"

namespace geocal {
namespace {

double score_range(double lambda) { return 1.0 - std::exp(-lambda * kPi); }

}  // namespace

void ReliabilityPolicy::validate() const {
    require(lambda > 0.0 && std::isfinite(lambda), ErrorKind::InvalidArgument, "lambda must be positive");
    require(tau_star > std::exp(-lambda * kPi) && tau_star <= 1.0, ErrorKind::InvalidArgument,
            "tau_star must lie in (exp(-lambda*pi), 1]");
    require(alpha > 0.0 && alpha < 1.0, ErrorKind::InvalidArgument, "alpha must lie in (0, 1)");
}

double reliability_score(const ProbVector& p_cal, double lambda) {
    require(lambda > 0.0, ErrorKind::InvalidArgument, "lambda must be positive");
    return std::exp(-lambda * distance_to_vertex(p_cal, argmax_class(p_cal)));
}

std::vector<double> reliability_scores(std::span<const ProbVector> p_cal, double lambda) {
    std::vector<double> out;
    out.reserve(p_cal.size());
    for (const auto& p : p_cal) out.push_back(reliability_score(p, lambda));
    return out;
}

double fit_threshold(std::span<const double> scores, const std::vector<bool>& correct, double alpha,
                     ThresholdRule rule) {
    require(scores.size() == correct.size(), ErrorKind::DimensionMismatch, "scores and correctness differ in length");
    require(!scores.empty(), ErrorKind::EmptyDataset, "threshold fit needs at least one score");
    require(alpha > 0.0 && alpha < 1.0, ErrorKind::InvalidArgument, "alpha must lie in (0, 1)");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return scores[i] > scores[j]; });

    // Walk distinct scores from the top; the kept set at tau is every score >= tau.
    bool found = false;
    double best = 0.0;
    std::size_t kept = 0;
    std::size_t errors = 0;
    for (std::size_t k = 0; k < order.size();) {
        const double tau = scores[order[k]];
        while (k < order.size() && scores[order[k]] == tau) {
            ++kept;
            if (!correct[order[k]]) ++errors;
            ++k;
        }
        if (static_cast<double>(errors) / static_cast<double>(kept) <= alpha) {
            if (rule == ThresholdRule::Largest) return tau;
            found = true;
            best = tau;
        }
    }
    require(found, ErrorKind::NoFeasibleThreshold, "no observed score keeps the automated error rate within alpha");
    return best;
}

Decision decide(double reliability, const ReliabilityPolicy& policy, std::size_t predicted_class) {
    Decision d;
    d.predicted_class = predicted_class;
    d.kind = reliability >= policy.tau_star ? DecisionKind::Automate : DecisionKind::Defer;
    return d;
}

Decision decide(const ProbVector& p_cal, const ReliabilityPolicy& policy) {
    return decide(reliability_score(p_cal, policy.lambda), policy, argmax_class(p_cal));
}

double reliability_tail_bound(double lambda, double t) {
    const double range = score_range(lambda);
    return 2.0 * std::exp(-2.0 * t * t / (range * range));
}

ConcentrationReport concentration_report(double lambda, double t, double delta) {
    require(lambda > 0.0 && std::isfinite(lambda), ErrorKind::InvalidArgument, "lambda must be positive");
    require(t > 0.0 && t < 1.0, ErrorKind::InvalidArgument, "t must lie in (0, 1)");
    require(delta > 0.0 && delta < 1.0, ErrorKind::InvalidArgument, "delta must lie in (0, 1)");

    ConcentrationReport r;
    r.lambda = lambda;
    r.t = t;
    r.delta = delta;
    const double range = score_range(lambda);
    r.sigma2 = range * range / 4.0;
    r.tail_coefficient = 2.0 / (range * range);
    r.tail_bound = 2.0 * std::exp(-r.tail_coefficient * t * t);
    r.sigma2_naive = (lambda * kPi) * (lambda * kPi) / 4.0;

    const double log_term = std::log(2.0 / delta) / (2.0 * t * t);
    r.n_ours = static_cast<long long>(std::ceil(r.sigma2 * log_term));
    r.n_naive = static_cast<long long>(std::ceil(r.sigma2_naive * log_term));
    return r;
}

}  // namespace geocal

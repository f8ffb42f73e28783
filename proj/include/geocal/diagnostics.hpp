#pragma once

// Evaluation metrics: proper scoring rules, binned calibration error,
// reliability-diagram data, error-detection curves and the deferral frontier.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "geocal/simplex.hpp"

namespace geocal {

enum class BinMode { EqualWidth, EqualCount };

struct BinningScheme {
    BinMode mode = BinMode::EqualWidth;
    std::size_t bin_count = 15;

    void validate() const;
};

// Defaults: 15 equal-width bins for overall ECE, 10 equal-count bins for diagrams.
inline constexpr BinningScheme kDefaultEceScheme{BinMode::EqualWidth, 15};
inline constexpr BinningScheme kDefaultDiagramScheme{BinMode::EqualCount, 10};

// Overall bins by max_k p_k and scores argmax correctness; per-class bins by
// p_j and scores the frequency of label j.
struct EceMode {
    bool overall = true;
    std::size_t cls = 0;

    static EceMode Overall() { return {true, 0}; }
    static EceMode PerClass(std::size_t j) { return {false, j}; }
};

struct ProperScores {
    double log_loss = 0.0;
    double brier = 0.0;
};

// Log loss clips p_y below at epsilon; Brier sums squared error over all classes.
ProperScores proper_scores(std::span<const ProbVector> probs, std::span<const std::size_t> labels,
                           double epsilon = 1e-6);

double ece(std::span<const ProbVector> probs, std::span<const std::size_t> labels, EceMode mode,
           BinningScheme scheme = kDefaultEceScheme);

struct DiagramBin {
    double lower = 0.0;
    double upper = 0.0;
    double mean_confidence = 0.0;
    double empirical_frequency = 0.0;
    std::size_t count = 0;
};

// EqualWidth emits every bin, empty ones with count 0. EqualCount emits
// bin_count contiguous chunks of the sorted sample.
std::vector<DiagramBin> reliability_diagram(std::span<const ProbVector> probs, std::span<const std::size_t> labels,
                                            EceMode mode, BinningScheme scheme = kDefaultDiagramScheme);

// Sum of count/n * |frequency - confidence| over the emitted bins.
double ece_from_bins(std::span<const DiagramBin> bins);

struct CurvePoint {
    double threshold = 0.0;
    double x = 0.0;
    double y = 0.0;
};

struct ErrorDetectionCurves {
    std::vector<CurvePoint> roc;  // (false positive rate, true positive rate)
    std::vector<CurvePoint> pr;   // (recall, precision)
    double auc = 0.5;
};

// Errors are the positive class and are flagged when score < threshold.
// AUC = P(score_error < score_correct) + P(tie) / 2 via midranks.
ErrorDetectionCurves error_detection_curves(std::span<const double> scores, const std::vector<bool>& correct);
double error_detection_auc(std::span<const double> scores, const std::vector<bool>& correct);

struct ParetoPoint {
    double threshold = 0.0;
    double deferral_rate = 0.0;
    double automated_error_rate = 0.0;
    std::size_t automated = 0;
    // No automated samples: the error rate is reported as 0.
    bool empty = false;
};

// One point per distinct score tau (ascending): deferral = P(score < tau),
// error among score >= tau. A final point past the largest score defers all.
std::vector<ParetoPoint> pareto_frontier(std::span<const double> scores, const std::vector<bool>& correct);

// Fraction of errors with score < tau, and fraction of samples with score < tau.
double error_capture(std::span<const double> scores, const std::vector<bool>& correct, double tau);
double deferral_rate(std::span<const double> scores, double tau);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct EvaluationReport {
    std::size_t n = 0;
    double log_loss = 0.0;
    double brier = 0.0;
    double ece_overall = 0.0;
    std::vector<double> ece_per_class;
    std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
    std::vector<ClassMetrics> per_class;
    double accuracy = 0.0;
};

EvaluationReport classification_report(std::span<const ProbVector> probs, std::span<const std::size_t> labels,
                                       BinningScheme ece_scheme = kDefaultEceScheme, double epsilon = 1e-6);

// Argmax correctness per row.
std::vector<bool> correctness(std::span<const ProbVector> probs, std::span<const std::size_t> labels);

}  // namespace geocal

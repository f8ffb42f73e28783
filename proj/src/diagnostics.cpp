#include "geocal/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "geocal/error.hpp"

namespace geocal {
namespace {

void check_inputs(std::span<const ProbVector> probs, std::span<const std::size_t> labels) {
    require(!probs.empty(), ErrorKind::EmptyDataset, "metrics need at least one row");
    require(probs.size() == labels.size(), ErrorKind::DimensionMismatch, "probabilities and labels differ in length");
    const std::size_t c = probs.front().size();
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i].size() != c) throw Error(ErrorKind::DimensionMismatch, "row " + std::to_string(i) + " has a different class count");
        if (labels[i] >= c) throw Error(ErrorKind::IndexOutOfRange, "label out of range at row " + std::to_string(i));
    }
}

void check_scores(std::span<const double> scores, const std::vector<bool>& correct) {
    require(scores.size() == correct.size(), ErrorKind::DimensionMismatch, "scores and correctness differ in length");
}

struct Observation {
    double key;
    double outcome;
};

std::vector<Observation> observations(std::span<const ProbVector> probs, std::span<const std::size_t> labels,
                                      EceMode mode) {
    std::vector<Observation> obs;
    obs.reserve(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const ProbVector& p = probs[i];
        if (mode.overall) {
            const std::size_t top = argmax_class(p);
            obs.push_back({p[top], top == labels[i] ? 1.0 : 0.0});
        } else {
            require(mode.cls < p.size(), ErrorKind::IndexOutOfRange, "per-class ECE class out of range");
            obs.push_back({p[mode.cls], labels[i] == mode.cls ? 1.0 : 0.0});
        }
    }
    return obs;
}

std::vector<DiagramBin> bin_observations(const std::vector<Observation>& obs, BinningScheme scheme) {
    scheme.validate();
    const std::size_t n = obs.size();
    const std::size_t bins = scheme.bin_count;
    std::vector<DiagramBin> out(bins);
    std::vector<double> key_sum(bins, 0.0);
    std::vector<double> outcome_sum(bins, 0.0);

    if (scheme.mode == BinMode::EqualWidth) {
        for (std::size_t b = 0; b < bins; ++b) {
            out[b].lower = static_cast<double>(b) / static_cast<double>(bins);
            out[b].upper = static_cast<double>(b + 1) / static_cast<double>(bins);
        }
        for (const auto& o : obs) {
            const double key = std::clamp(o.key, 0.0, 1.0);
            const auto b = std::min(static_cast<std::size_t>(key * static_cast<double>(bins)), bins - 1);
            key_sum[b] += o.key;
            outcome_sum[b] += o.outcome;
            ++out[b].count;
        }
    } else {
        if (n < bins) {
            throw Error(ErrorKind::InsufficientData, "equal-count binning needs at least " + std::to_string(bins) +
                                                         " rows, got " + std::to_string(n));
        }
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return obs[i].key < obs[j].key; });
        const std::size_t base = n / bins;
        const std::size_t extra = n % bins;
        std::size_t pos = 0;
        for (std::size_t b = 0; b < bins; ++b) {
            const std::size_t size = base + (b < extra ? 1 : 0);
            out[b].lower = obs[order[pos]].key;
            out[b].upper = obs[order[pos + size - 1]].key;
            for (std::size_t k = pos; k < pos + size; ++k) {
                key_sum[b] += obs[order[k]].key;
                outcome_sum[b] += obs[order[k]].outcome;
            }
            out[b].count = size;
            pos += size;
        }
    }

    for (std::size_t b = 0; b < bins; ++b) {
        if (out[b].count == 0) continue;
        const double cnt = static_cast<double>(out[b].count);
        out[b].mean_confidence = key_sum[b] / cnt;
        out[b].empirical_frequency = outcome_sum[b] / cnt;
    }
    return out;
}

// Sorted distinct values.
std::vector<double> distinct_sorted(std::span<const double> scores) {
    std::vector<double> v(scores.begin(), scores.end());
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

}  // namespace

void BinningScheme::validate() const {
    require(bin_count >= 2, ErrorKind::InvalidArgument, "bin_count must be at least 2");
}

ProperScores proper_scores(std::span<const ProbVector> probs, std::span<const std::size_t> labels, double epsilon) {
    check_inputs(probs, labels);
    ProperScores s;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const ProbVector& p = probs[i];
        s.log_loss -= std::log(std::max(p[labels[i]], epsilon));
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double diff = p[j] - (j == labels[i] ? 1.0 : 0.0);
            s.brier += diff * diff;
        }
    }
    const double n = static_cast<double>(probs.size());
    s.log_loss /= n;
    s.brier /= n;
    return s;
}

double ece_from_bins(std::span<const DiagramBin> bins) {
    std::size_t n = 0;
    for (const auto& b : bins) n += b.count;
    require(n > 0, ErrorKind::EmptyDataset, "no samples in bins");
    double total = 0.0;
    for (const auto& b : bins) {
        if (b.count == 0) continue;
        total += static_cast<double>(b.count) / static_cast<double>(n) *
                 std::abs(b.empirical_frequency - b.mean_confidence);
    }
    return total;
}

double ece(std::span<const ProbVector> probs, std::span<const std::size_t> labels, EceMode mode,
           BinningScheme scheme) {
    check_inputs(probs, labels);
    const auto bins = bin_observations(observations(probs, labels, mode), scheme);
    return ece_from_bins(bins);
}

std::vector<DiagramBin> reliability_diagram(std::span<const ProbVector> probs, std::span<const std::size_t> labels,
                                            EceMode mode, BinningScheme scheme) {
    check_inputs(probs, labels);
    return bin_observations(observations(probs, labels, mode), scheme);
}

double error_detection_auc(std::span<const double> scores, const std::vector<bool>& correct) {
    check_scores(scores, correct);
    const std::size_t n = scores.size();
    std::size_t n_correct = 0;
    for (bool b : correct) n_correct += b ? 1 : 0;
    const std::size_t n_error = n - n_correct;
    require(n_correct > 0 && n_error > 0, ErrorKind::UndefinedAUC, "AUC needs both correct and erroneous samples");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return scores[i] < scores[j]; });

    // Midranks (1-based) summed over the correct samples.
    double rank_sum_correct = 0.0;
    for (std::size_t k = 0; k < n;) {
        std::size_t end = k;
        while (end < n && scores[order[end]] == scores[order[k]]) ++end;
        const double midrank = 0.5 * static_cast<double>(k + 1 + end);
        for (std::size_t m = k; m < end; ++m) {
            if (correct[order[m]]) rank_sum_correct += midrank;
        }
        k = end;
    }
    const double nc = static_cast<double>(n_correct);
    const double u = rank_sum_correct - nc * (nc + 1.0) / 2.0;
    return u / (nc * static_cast<double>(n_error));
}

ErrorDetectionCurves error_detection_curves(std::span<const double> scores, const std::vector<bool>& correct) {
    ErrorDetectionCurves out;
    out.auc = error_detection_auc(scores, correct);

    const std::size_t n = scores.size();
    std::size_t n_error = 0;
    for (bool b : correct) n_error += b ? 0 : 1;
    const double total_error = static_cast<double>(n_error);
    const double total_correct = static_cast<double>(n - n_error);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return scores[i] < scores[j]; });

    auto thresholds = distinct_sorted(scores);
    thresholds.push_back(std::nextafter(thresholds.back(), std::numeric_limits<double>::infinity()));

    std::size_t pos = 0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (double tau : thresholds) {
        while (pos < n && scores[order[pos]] < tau) {
            if (correct[order[pos]]) {
                ++fp;
            } else {
                ++tp;
            }
            ++pos;
        }
        out.roc.push_back({tau, static_cast<double>(fp) / total_correct, static_cast<double>(tp) / total_error});
        if (tp + fp > 0) {
            out.pr.push_back({tau, static_cast<double>(tp) / total_error,
                              static_cast<double>(tp) / static_cast<double>(tp + fp)});
        }
    }
    return out;
}

std::vector<ParetoPoint> pareto_frontier(std::span<const double> scores, const std::vector<bool>& correct) {
    check_scores(scores, correct);
    require(!scores.empty(), ErrorKind::EmptyDataset, "frontier needs at least one score");
    const std::size_t n = scores.size();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return scores[i] < scores[j]; });

    std::size_t total_errors = 0;
    for (bool b : correct) total_errors += b ? 0 : 1;

    auto thresholds = distinct_sorted(scores);
    thresholds.push_back(std::nextafter(thresholds.back(), std::numeric_limits<double>::infinity()));

    std::vector<ParetoPoint> out;
    out.reserve(thresholds.size());
    std::size_t deferred = 0;
    std::size_t deferred_errors = 0;
    for (double tau : thresholds) {
        while (deferred < n && scores[order[deferred]] < tau) {
            if (!correct[order[deferred]]) ++deferred_errors;
            ++deferred;
        }
        ParetoPoint pt;
        pt.threshold = tau;
        pt.deferral_rate = static_cast<double>(deferred) / static_cast<double>(n);
        pt.automated = n - deferred;
        pt.empty = pt.automated == 0;
        pt.automated_error_rate =
            pt.empty ? 0.0
                     : static_cast<double>(total_errors - deferred_errors) / static_cast<double>(pt.automated);
        out.push_back(pt);
    }
    return out;
}

double error_capture(std::span<const double> scores, const std::vector<bool>& correct, double tau) {
    check_scores(scores, correct);
    std::size_t errors = 0;
    std::size_t captured = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (correct[i]) continue;
        ++errors;
        if (scores[i] < tau) ++captured;
    }
    return errors == 0 ? 0.0 : static_cast<double>(captured) / static_cast<double>(errors);
}

double deferral_rate(std::span<const double> scores, double tau) {
    require(!scores.empty(), ErrorKind::EmptyDataset, "deferral rate needs at least one score");
    const auto deferred = std::count_if(scores.begin(), scores.end(), [&](double s) { return s < tau; });
    return static_cast<double>(deferred) / static_cast<double>(scores.size());
}

std::vector<bool> correctness(std::span<const ProbVector> probs, std::span<const std::size_t> labels) {
    require(probs.size() == labels.size(), ErrorKind::DimensionMismatch, "probabilities and labels differ in length");
    std::vector<bool> out(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) out[i] = argmax_class(probs[i]) == labels[i];
    return out;
}

EvaluationReport classification_report(std::span<const ProbVector> probs, std::span<const std::size_t> labels,
                                       BinningScheme ece_scheme, double epsilon) {
    check_inputs(probs, labels);
    const std::size_t c = probs.front().size();
    EvaluationReport r;
    r.n = probs.size();
    r.confusion.assign(c, std::vector<std::size_t>(c, 0));
    for (std::size_t i = 0; i < probs.size(); ++i) ++r.confusion[labels[i]][argmax_class(probs[i])];

    std::size_t diag = 0;
    for (std::size_t j = 0; j < c; ++j) {
        std::size_t predicted = 0;
        std::size_t actual = 0;
        for (std::size_t k = 0; k < c; ++k) {
            predicted += r.confusion[k][j];
            actual += r.confusion[j][k];
        }
        const std::size_t tp = r.confusion[j][j];
        diag += tp;
        ClassMetrics m;
        m.precision = predicted == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(predicted);
        m.recall = actual == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(actual);
        m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
        r.per_class.push_back(m);
    }
    r.accuracy = static_cast<double>(diag) / static_cast<double>(r.n);

    const ProperScores ps = proper_scores(probs, labels, epsilon);
    r.log_loss = ps.log_loss;
    r.brier = ps.brier;
    r.ece_overall = ece(probs, labels, EceMode::Overall(), ece_scheme);
    for (std::size_t j = 0; j < c; ++j) r.ece_per_class.push_back(ece(probs, labels, EceMode::PerClass(j), ece_scheme));
    return r;
}

}  // namespace geocal

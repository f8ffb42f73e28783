#pragma once

// Brute-force reference implementations used to check the library. They
// favour directness over speed and share no code with src/.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

namespace oracle {

using Row = std::vector<double>;

// Fisher-Rao distance through the sphere embedding u = sqrt(p): twice the
// angle between u and v, computed as 4 * atan2(|u - v|, |u + v|).
inline double fisher_rao(const Row& p, const Row& q) {
    double diff = 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double u = std::sqrt(p[i]);
        const double v = std::sqrt(q[i]);
        diff += (u - v) * (u - v);
        sum += (u + v) * (u + v);
    }
    return 4.0 * std::atan2(std::sqrt(diff), std::sqrt(sum));
}

inline std::size_t argmax(const Row& p) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < p.size(); ++j) {
        if (p[j] > p[best]) best = j;
    }
    return best;
}

inline double log_loss(const std::vector<Row>& probs, const std::vector<std::size_t>& labels, double eps) {
    double total = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) total += -std::log(std::max(probs[i][labels[i]], eps));
    return total / static_cast<double>(probs.size());
}

inline double brier(const std::vector<Row>& probs, const std::vector<std::size_t>& labels) {
    double total = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        for (std::size_t j = 0; j < probs[i].size(); ++j) {
            const double target = j == labels[i] ? 1.0 : 0.0;
            total += (probs[i][j] - target) * (probs[i][j] - target);
        }
    }
    return total / static_cast<double>(probs.size());
}

// (key, outcome) per sample for overall (cls < 0) or per-class binning.
inline void keys(const std::vector<Row>& probs, const std::vector<std::size_t>& labels, int cls,
                 std::vector<double>& key, std::vector<double>& outcome) {
    key.clear();
    outcome.clear();
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (cls < 0) {
            const std::size_t top = argmax(probs[i]);
            key.push_back(probs[i][top]);
            outcome.push_back(top == labels[i] ? 1.0 : 0.0);
        } else {
            key.push_back(probs[i][static_cast<std::size_t>(cls)]);
            outcome.push_back(labels[i] == static_cast<std::size_t>(cls) ? 1.0 : 0.0);
        }
    }
}

// Equal-width ECE: every bin rescans the whole sample.
inline double ece_equal_width(const std::vector<Row>& probs, const std::vector<std::size_t>& labels, int cls,
                              std::size_t bins) {
    std::vector<double> key;
    std::vector<double> outcome;
    keys(probs, labels, cls, key, outcome);
    const double n = static_cast<double>(key.size());
    double total = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
        double conf = 0.0;
        double acc = 0.0;
        double count = 0.0;
        for (std::size_t i = 0; i < key.size(); ++i) {
            auto idx = static_cast<std::size_t>(std::floor(key[i] * static_cast<double>(bins)));
            if (idx >= bins) idx = bins - 1;
            if (idx != b) continue;
            conf += key[i];
            acc += outcome[i];
            count += 1.0;
        }
        if (count > 0.0) total += count / n * std::abs(acc / count - conf / count);
    }
    return total;
}

// Equal-count ECE: sort by (key, index) and cut into chunks whose sizes differ by at most one.
inline double ece_equal_count(const std::vector<Row>& probs, const std::vector<std::size_t>& labels, int cls,
                              std::size_t bins) {
    std::vector<double> key;
    std::vector<double> outcome;
    keys(probs, labels, cls, key, outcome);
    std::vector<std::size_t> order(key.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return key[a] < key[b] || (key[a] == key[b] && a < b);
    });
    const std::size_t n = key.size();
    double total = 0.0;
    std::size_t start = 0;
    for (std::size_t b = 0; b < bins; ++b) {
        const std::size_t size = n / bins + (b < n % bins ? 1 : 0);
        double conf = 0.0;
        double acc = 0.0;
        for (std::size_t k = start; k < start + size; ++k) {
            conf += key[order[k]];
            acc += outcome[order[k]];
        }
        if (size > 0) {
            total += static_cast<double>(size) / static_cast<double>(n) *
                     std::abs(acc / static_cast<double>(size) - conf / static_cast<double>(size));
        }
        start += size;
    }
    return total;
}

// P(score_error < score_correct) + P(tie) / 2 over all pairs.
inline double auc_pairwise(const std::vector<double>& scores, const std::vector<bool>& correct) {
    double wins = 0.0;
    double pairs = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (correct[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (!correct[j]) continue;
            pairs += 1.0;
            if (scores[i] < scores[j]) wins += 1.0;
            if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / pairs;
}

struct Tally {
    std::vector<std::vector<std::size_t>> confusion;
    std::vector<double> precision;
    std::vector<double> recall;
    std::vector<double> f1;
    double accuracy = 0.0;
};

inline Tally tally(const std::vector<Row>& probs, const std::vector<std::size_t>& labels, std::size_t c) {
    Tally t;
    t.confusion.assign(c, std::vector<std::size_t>(c, 0));
    std::size_t hits = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const std::size_t pred = argmax(probs[i]);
        ++t.confusion[labels[i]][pred];
        if (pred == labels[i]) ++hits;
    }
    t.accuracy = static_cast<double>(hits) / static_cast<double>(probs.size());
    for (std::size_t j = 0; j < c; ++j) {
        std::size_t tp = 0;
        std::size_t predicted = 0;
        std::size_t actual = 0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            const std::size_t pred = argmax(probs[i]);
            if (pred == j) ++predicted;
            if (labels[i] == j) ++actual;
            if (pred == j && labels[i] == j) ++tp;
        }
        const double p = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
        const double r = actual ? static_cast<double>(tp) / static_cast<double>(actual) : 0.0;
        t.precision.push_back(p);
        t.recall.push_back(r);
        t.f1.push_back(p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0);
    }
    return t;
}

// Central differences of f at x with step h.
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double h) {
    std::vector<double> g(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double orig = x[k];
        x[k] = orig + h;
        const double up = f(x);
        x[k] = orig - h;
        const double down = f(x);
        x[k] = orig;
        g[k] = (up - down) / (2.0 * h);
    }
    return g;
}

// Regularized cross-entropy written from scratch; theta holds A row-major then b.
inline double calibration_loss(const std::vector<double>& theta, std::size_t c, const std::vector<Row>& probs,
                               const std::vector<std::size_t>& labels, double lambda1, double lambda2) {
    const std::size_t d = c - 1;
    double loss = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        std::vector<double> z(d);
        for (std::size_t k = 0; k < d; ++k) z[k] = std::log(probs[i][k] / probs[i][d]);
        std::vector<double> logits(c, 0.0);
        for (std::size_t r = 0; r < d; ++r) {
            double s = theta[d * d + r];
            for (std::size_t k = 0; k < d; ++k) s += theta[r * d + k] * z[k];
            logits[r] = s;
        }
        double denom = 0.0;
        for (double l : logits) denom += std::exp(l);
        loss += std::log(denom) - logits[labels[i]];
    }
    for (std::size_t r = 0; r < d; ++r) {
        for (std::size_t k = 0; k < d; ++k) {
            const double e = theta[r * d + k] - (r == k ? 1.0 : 0.0);
            loss += lambda1 * e * e;
        }
        loss += lambda2 * theta[d * d + r] * theta[d * d + r];
    }
    return loss;
}

}  // namespace oracle

#include "geocal/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <boost/math/tools/minima.hpp>

#include "geocal/error.hpp"

namespace geocal {
namespace {

// Ridge toward (a, b) = (1, 0) for the one-vs-rest fits; keeps separable
// classes finite without visibly moving well-posed fits.
constexpr double kOvrRidge = 1e-6;

double log1p_exp(double s) { return s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s)); }

void require_two_classes(const LabeledDataset& data) {
    const auto labels = data.labels();
    const bool all_same =
        std::all_of(labels.begin(), labels.end(), [&](std::size_t y) { return y == labels.front(); });
    require(!all_same, ErrorKind::DegenerateLabels, "one-vs-rest calibration needs at least two label values");
}

double temperature_nll(const std::vector<std::vector<double>>& logp, const std::vector<std::size_t>& labels,
                       double inv_t) {
    double nll = 0.0;
    for (std::size_t i = 0; i < logp.size(); ++i) {
        const auto& row = logp[i];
        double top = -INFINITY;
        for (double v : row) top = std::max(top, v * inv_t);
        double sum = 0.0;
        for (double v : row) sum += std::exp(v * inv_t - top);
        nll += top + std::log(sum) - row[labels[i]] * inv_t;
    }
    return nll;
}

ProbVector renormalized(std::vector<double> q) {
    const double sum = std::accumulate(q.begin(), q.end(), 0.0);
    if (!(sum > 0.0)) return ProbVector::uniform(q.size());
    for (double& v : q) v /= sum;
    return ProbVector(std::move(q));
}

}  // namespace

std::string_view to_string(BaselineKind kind) noexcept {
    switch (kind) {
        case BaselineKind::Temperature: return "temperature";
        case BaselineKind::PlattOvR: return "platt_ovr";
        case BaselineKind::Isotonic: return "isotonic";
    }
    return "unknown";
}

BaselineKind parse_baseline_kind(std::string_view name) {
    if (name == "temperature") return BaselineKind::Temperature;
    if (name == "platt_ovr" || name == "platt") return BaselineKind::PlattOvR;
    if (name == "isotonic") return BaselineKind::Isotonic;
    throw Error(ErrorKind::InvalidArgument, "unknown baseline kind '" + std::string(name) + "'");
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double StepFunction::operator()(double x) const {
    if (values.empty()) return 0.0;
    const auto it = std::upper_bound(thresholds.begin(), thresholds.end(), x);
    if (it == thresholds.begin()) return values.front();
    return values[static_cast<std::size_t>(it - thresholds.begin()) - 1];
}

PlattParams fit_platt_binary(std::span<const double> scores, std::span<const int> targets, double lambda_a,
                             double lambda_b) {
    require(scores.size() == targets.size(), ErrorKind::DimensionMismatch, "scores and targets differ in length");
    require(!scores.empty(), ErrorKind::EmptyDataset, "Platt fit needs at least one row");

    const auto objective = [&](double a, double b) {
        double f = lambda_a * (a - 1.0) * (a - 1.0) + lambda_b * b * b;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const double s = a * scores[i] + b;
            f += log1p_exp(s) - targets[i] * s;
        }
        return f;
    };

    PlattParams p;
    double f = objective(p.a, p.b);
    for (int iter = 0; iter < 200; ++iter) {
        double ga = 2.0 * lambda_a * (p.a - 1.0);
        double gb = 2.0 * lambda_b * p.b;
        double haa = 2.0 * lambda_a;
        double hab = 0.0;
        double hbb = 2.0 * lambda_b;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const double x = scores[i];
            const double q = sigmoid(p.a * x + p.b);
            const double r = q - targets[i];
            const double w = q * (1.0 - q);
            ga += r * x;
            gb += r;
            haa += w * x * x;
            hab += w * x;
            hbb += w;
        }
        const double det = haa * hbb - hab * hab;
        double da;
        double db;
        if (det > 1e-300 && std::isfinite(det)) {
            da = -(hbb * ga - hab * gb) / det;
            db = -(haa * gb - hab * ga) / det;
        } else {
            da = -ga;
            db = -gb;
        }
        const double slope = ga * da + gb * db;
        double step = 1.0;
        bool accepted = false;
        for (int k = 0; k < 60; ++k) {
            const double f_new = objective(p.a + step * da, p.b + step * db);
            if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * slope) {
                p.a += step * da;
                p.b += step * db;
                f = f_new;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        const double move = std::abs(step * da) + std::abs(step * db);
        if (!accepted || move < 1e-13 * (1.0 + std::abs(p.a) + std::abs(p.b))) break;
    }
    return p;
}

StepFunction fit_isotonic(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size(), ErrorKind::DimensionMismatch, "isotonic inputs differ in length");
    require(!x.empty(), ErrorKind::EmptyDataset, "isotonic fit needs at least one point");

    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });

    struct Block {
        double sum;
        double weight;
        double x_min;
    };
    std::vector<Block> blocks;
    for (std::size_t idx : order) {
        // Equal inputs share one block so the result is a function of x.
        if (!blocks.empty() && blocks.back().x_min == x[idx]) {
            blocks.back().sum += y[idx];
            blocks.back().weight += 1.0;
        } else {
            blocks.push_back({y[idx], 1.0, x[idx]});
        }
        while (blocks.size() >= 2) {
            const Block& hi = blocks[blocks.size() - 1];
            const Block& lo = blocks[blocks.size() - 2];
            if (lo.sum / lo.weight <= hi.sum / hi.weight) break;
            Block merged{lo.sum + hi.sum, lo.weight + hi.weight, lo.x_min};
            blocks.pop_back();
            blocks.back() = merged;
        }
    }

    StepFunction f;
    for (const Block& blk : blocks) {
        f.thresholds.push_back(blk.x_min);
        f.values.push_back(std::clamp(blk.sum / blk.weight, 0.0, 1.0));
    }
    return f;
}

BaselineModel temperature_model(std::size_t c, double temperature, double epsilon) {
    require(temperature > 0.0, ErrorKind::InvalidArgument, "temperature must be positive");
    BaselineModel m;
    m.kind = BaselineKind::Temperature;
    m.c = c;
    m.epsilon = epsilon;
    m.temperature = temperature;
    return m;
}

BaselineModel fit_baseline(BaselineKind kind, const LabeledDataset& data, const InteriorConfig& interior) {
    require(!data.empty(), ErrorKind::EmptyDataset, "baseline fit needs at least one row");
    const std::size_t c = data.classes();
    interior.validate(c);

    BaselineModel model;
    model.kind = kind;
    model.c = c;
    model.epsilon = interior.epsilon;

    std::vector<ProbVector> clipped;
    clipped.reserve(data.size());
    for (const auto& row : data.rows()) clipped.push_back(clip(row.probs, interior));
    const auto labels = data.labels();

    switch (kind) {
        case BaselineKind::Temperature: {
            std::vector<std::vector<double>> logp(data.size(), std::vector<double>(c));
            for (std::size_t i = 0; i < data.size(); ++i) {
                for (std::size_t j = 0; j < c; ++j) logp[i][j] = std::log(clipped[i][j]);
            }
            // NLL is convex in the inverse temperature.
            const auto result = boost::math::tools::brent_find_minima(
                [&](double inv_t) { return temperature_nll(logp, labels, inv_t); }, 1.0 / kMaxTemperature,
                1.0 / kMinTemperature, 40);
            model.temperature = 1.0 / result.first;
            break;
        }
        case BaselineKind::PlattOvR: {
            require_two_classes(data);
            std::vector<double> scores(data.size());
            std::vector<int> targets(data.size());
            for (std::size_t j = 0; j < c; ++j) {
                for (std::size_t i = 0; i < data.size(); ++i) {
                    scores[i] = logit(clipped[i][j]);
                    targets[i] = labels[i] == j ? 1 : 0;
                }
                model.platt.push_back(fit_platt_binary(scores, targets, kOvrRidge, kOvrRidge));
            }
            break;
        }
        case BaselineKind::Isotonic: {
            require_two_classes(data);
            std::vector<double> xs(data.size());
            std::vector<double> ys(data.size());
            for (std::size_t j = 0; j < c; ++j) {
                for (std::size_t i = 0; i < data.size(); ++i) {
                    xs[i] = data[i].probs[j];
                    ys[i] = labels[i] == j ? 1.0 : 0.0;
                }
                model.isotonic.push_back(fit_isotonic(xs, ys));
            }
            break;
        }
    }
    return model;
}

ProbVector baseline_apply(const BaselineModel& model, const ProbVector& p) {
    if (p.size() != model.c) {
        throw Error(ErrorKind::DimensionMismatch, "input has " + std::to_string(p.size()) +
                                                      " classes, model expects " + std::to_string(model.c));
    }
    const std::size_t c = model.c;
    std::vector<double> q(c);
    switch (model.kind) {
        case BaselineKind::Temperature: {
            const ProbVector pc = clip(p, InteriorConfig{model.epsilon});
            double top = -INFINITY;
            for (std::size_t j = 0; j < c; ++j) {
                q[j] = std::log(pc[j]) / model.temperature;
                top = std::max(top, q[j]);
            }
            for (double& v : q) v = std::exp(v - top);
            return renormalized(std::move(q));
        }
        case BaselineKind::PlattOvR: {
            require(model.platt.size() == c, ErrorKind::InvalidArgument, "Platt model needs one pair per class");
            const ProbVector pc = clip(p, InteriorConfig{model.epsilon});
            for (std::size_t j = 0; j < c; ++j) {
                q[j] = sigmoid(model.platt[j].a * logit(pc[j]) + model.platt[j].b);
            }
            break;
        }
        case BaselineKind::Isotonic: {
            require(model.isotonic.size() == c, ErrorKind::InvalidArgument,
                    "isotonic model needs one step function per class");
            for (std::size_t j = 0; j < c; ++j) q[j] = model.isotonic[j](p[j]);
            break;
        }
    }
    // One-vs-rest outputs are divided by their sum; all-zero rows become uniform.
    return renormalized(std::move(q));
}

}  // namespace geocal

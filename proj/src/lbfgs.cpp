#include "geocal/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace geocal {
namespace {

struct CurvaturePair {
    Eigen::VectorXd s;
    Eigen::VectorXd y;
    double rho;
};

// Two-loop recursion: returns -H * g for the implicit inverse Hessian H.
Eigen::VectorXd search_direction(const Eigen::VectorXd& g, const std::deque<CurvaturePair>& pairs) {
    Eigen::VectorXd q = g;
    std::vector<double> alpha(pairs.size());
    for (std::size_t i = pairs.size(); i-- > 0;) {
        alpha[i] = pairs[i].rho * pairs[i].s.dot(q);
        q -= alpha[i] * pairs[i].y;
    }
    if (!pairs.empty()) {
        const auto& last = pairs.back();
        q *= last.s.dot(last.y) / last.y.squaredNorm();
    }
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const double beta = pairs[i].rho * pairs[i].y.dot(q);
        q += (alpha[i] - beta) * pairs[i].s;
    }
    return -q;
}

}  // namespace

LbfgsResult minimize_lbfgs(const Objective& objective, Eigen::VectorXd x0, const LbfgsOptions& options) {
    LbfgsResult result;
    result.x = std::move(x0);
    Eigen::VectorXd g(result.x.size());
    double f = objective(result.x, g);
    result.history.push_back(f);

    const double tolerance = options.gradient_tolerance * options.gradient_scale;
    std::deque<CurvaturePair> pairs;
    Eigen::VectorXd x_new(result.x.size());
    Eigen::VectorXd g_new(result.x.size());

    int iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        if (g.norm() <= tolerance) {
            result.converged = true;
            break;
        }
        Eigen::VectorXd d = search_direction(g, pairs);
        double slope = g.dot(d);
        if (!(slope < 0.0)) {
            pairs.clear();
            d = -g;
            slope = -g.squaredNorm();
        }

        // First step has no curvature information; keep it short.
        double step = pairs.empty() ? std::min(1.0, 1.0 / g.norm()) : 1.0;
        bool accepted = false;
        double f_new = f;
        for (int k = 0; k < options.max_backtracks; ++k) {
            x_new = result.x + step * d;
            f_new = objective(x_new, g_new);
            if (std::isfinite(f_new) && f_new <= f + options.armijo * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        // No step, or only steps that leave f unchanged in double precision.
        if (!accepted || !(f_new < f)) {
            const double resolvable = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f));
            result.converged = -slope <= resolvable;
            break;
        }

        CurvaturePair pair{x_new - result.x, g_new - g, 0.0};
        const double sy = pair.s.dot(pair.y);
        if (sy > 1e-12 * pair.y.squaredNorm() && sy > 0.0) {
            pair.rho = 1.0 / sy;
            pairs.push_back(std::move(pair));
            if (static_cast<int>(pairs.size()) > options.memory) pairs.pop_front();
        }
        result.x = x_new;
        g = g_new;
        f = f_new;
        result.history.push_back(f);
    }
    if (iter == options.max_iterations && g.norm() <= tolerance) result.converged = true;

    result.value = f;
    result.gradient_norm = g.norm();
    result.iterations = iter;
    return result;
}

}  // namespace geocal

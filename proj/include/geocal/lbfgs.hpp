#pragma once

// Limited-memory BFGS with a backtracking (sufficient decrease) line search.

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace geocal {

struct LbfgsOptions {
    int max_iterations = 500;
    int memory = 10;
    // Stop once ||grad|| <= gradient_tolerance * gradient_scale.
    double gradient_tolerance = 1e-8;
    double gradient_scale = 1.0;
    double armijo = 1e-4;
    int max_backtracks = 60;
};

struct LbfgsResult {
    Eigen::VectorXd x;
    double value = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    // Objective after each accepted step, starting with the initial point.
    std::vector<double> history;
};

// Objective returns f(x) and writes the gradient into its second argument.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

LbfgsResult minimize_lbfgs(const Objective& objective, Eigen::VectorXd x0, const LbfgsOptions& options);

}  // namespace geocal

#pragma once

// Affine calibration in ALR coordinates:
//   p_cal = alr_inverse(A * alr(clip(p)) + b)
// fitted by minimizing the summed cross-entropy plus
//   lambda1 * ||A - I||_F^2 + lambda2 * ||b||^2.

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "geocal/dataset.hpp"
#include "geocal/simplex.hpp"

namespace geocal {

struct FitInfo {
    int iterations = 0;
    double final_loss = 0.0;
    bool converged = false;
    // Norm of the loss gradient divided by the row count.
    double gradient_norm = 0.0;
    // Smallest eigenvalue of (A + A^T) / 2.
    double min_eig_sym_A = 0.0;
    // Smallest real part among the (possibly complex) eigenvalues of A.
    double min_real_eig_A = 0.0;
    // Fewer than 10 rows per free parameter.
    bool small_sample = false;
};

struct CalibrationModel {
    std::size_t c = 2;
    Eigen::MatrixXd A;  // (c-1) x (c-1)
    Eigen::VectorXd b;  // c-1
    double lambda1 = 0.01;
    double lambda2 = 0.01;
    double epsilon = 1e-6;
    bool trace_constraint = false;
    FitInfo fit_info;

    static CalibrationModel identity(std::size_t c, double epsilon = 1e-6);

    std::size_t dim() const noexcept { return c - 1; }
    std::size_t parameter_count() const noexcept { return dim() * dim() + dim(); }

    // A in row-major order followed by b.
    Eigen::VectorXd flatten() const;
    void unflatten(const Eigen::VectorXd& theta);

    // Throws InvalidArgument on shape mismatch or non-finite entries.
    void validate() const;
};

struct FitConfig {
    double lambda1 = 0.01;
    double lambda2 = 0.01;
    // Floor on the smallest eigenvalue of the symmetric part of A.
    double delta = 1e-3;
    int max_iterations = 500;
    // Compared against ||grad|| / n.
    double gradient_tolerance = 1e-8;
    // Shift the diagonal of A after fitting so that tr(A) = c - 1.
    bool trace_constraint = false;
    InteriorConfig interior{};

    void validate() const;
};

struct LossAndGradient {
    double loss = 0.0;
    Eigen::VectorXd gradient;  // same layout as CalibrationModel::flatten()
};

// ALR coordinates of the clipped inputs, one row per sample.
struct AlrDesign {
    Eigen::MatrixXd z;  // n x (c-1)
    std::vector<std::size_t> labels;
    std::size_t c = 2;

    static AlrDesign build(const LabeledDataset& data, const InteriorConfig& interior);
    std::size_t rows() const noexcept { return labels.size(); }
};

LossAndGradient calibration_loss(const CalibrationModel& model, const LabeledDataset& data);
LossAndGradient calibration_loss(const CalibrationModel& model, const AlrDesign& design);

// Default init is A = I, b = 0. When loss_history is given it receives the
// loss after each accepted optimizer step.
CalibrationModel fit_geometric(const LabeledDataset& data, const FitConfig& cfg,
                               const std::optional<CalibrationModel>& init = std::nullopt,
                               std::vector<double>* loss_history = nullptr);

ProbVector apply_calibration(const CalibrationModel& model, const ProbVector& p);
std::vector<ProbVector> apply_calibration(const CalibrationModel& model, const std::vector<ProbVector>& ps);

// Hessian of lambda1 * ||A - I||_F^2 + lambda2 * ||b||^2 in flattened coordinates.
Eigen::MatrixXd penalty_hessian(std::size_t c, double lambda1, double lambda2);

double min_eig_symmetric_part(const Eigen::MatrixXd& a);
double min_real_eigenvalue(const Eigen::MatrixXd& a);

// Frobenius-type distance sqrt(||A1 - A2||_F^2 + ||b1 - b2||^2).
double parameter_distance(const CalibrationModel& lhs, const CalibrationModel& rhs);

}  // namespace geocal

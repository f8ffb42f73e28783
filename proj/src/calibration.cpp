#include "geocal/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "geocal/error.hpp"
#include "geocal/lbfgs.hpp"

namespace geocal {

CalibrationModel CalibrationModel::identity(std::size_t c, double epsilon) {
    require(c >= 2, ErrorKind::InvalidArgument, "class count must be at least 2");
    CalibrationModel m;
    m.c = c;
    m.A = Eigen::MatrixXd::Identity(c - 1, c - 1);
    m.b = Eigen::VectorXd::Zero(c - 1);
    m.epsilon = epsilon;
    m.fit_info.min_eig_sym_A = 1.0;
    m.fit_info.min_real_eig_A = 1.0;
    return m;
}

Eigen::VectorXd CalibrationModel::flatten() const {
    const auto d = static_cast<Eigen::Index>(dim());
    Eigen::VectorXd theta(d * d + d);
    for (Eigen::Index r = 0; r < d; ++r) {
        for (Eigen::Index col = 0; col < d; ++col) theta(r * d + col) = A(r, col);
    }
    theta.tail(d) = b;
    return theta;
}

void CalibrationModel::unflatten(const Eigen::VectorXd& theta) {
    const auto d = static_cast<Eigen::Index>(dim());
    require(theta.size() == d * d + d, ErrorKind::DimensionMismatch, "parameter vector has wrong length");
    A.resize(d, d);
    for (Eigen::Index r = 0; r < d; ++r) {
        for (Eigen::Index col = 0; col < d; ++col) A(r, col) = theta(r * d + col);
    }
    b = theta.tail(d);
}

void CalibrationModel::validate() const {
    require(c >= 2, ErrorKind::InvalidArgument, "class count must be at least 2");
    const auto d = static_cast<Eigen::Index>(dim());
    require(A.rows() == d && A.cols() == d, ErrorKind::InvalidArgument, "A must be (c-1) x (c-1)");
    require(b.size() == d, ErrorKind::InvalidArgument, "b must have c-1 entries");
    require(A.allFinite() && b.allFinite(), ErrorKind::InvalidArgument, "model parameters must be finite");
    require(epsilon > 0.0 && static_cast<double>(c - 1) * epsilon < 1.0, ErrorKind::InvalidArgument,
            "model epsilon out of range");
}

void FitConfig::validate() const {
    require(lambda1 >= 0.0 && lambda2 >= 0.0, ErrorKind::InvalidArgument, "regularization weights must be >= 0");
    require(delta > 0.0, ErrorKind::InvalidArgument, "delta must be positive");
    require(max_iterations >= 1, ErrorKind::InvalidArgument, "max_iterations must be >= 1");
    require(gradient_tolerance > 0.0, ErrorKind::InvalidArgument, "gradient_tolerance must be positive");
}

AlrDesign AlrDesign::build(const LabeledDataset& data, const InteriorConfig& interior) {
    const std::size_t c = data.classes();
    interior.validate(c);
    AlrDesign design;
    design.c = c;
    design.z.resize(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(c - 1));
    design.labels.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const AlrVector z = alr(clip(data[i].probs, interior));
        for (std::size_t k = 0; k + 1 < c; ++k) {
            design.z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = z[k];
        }
        design.labels.push_back(data[i].label);
    }
    return design;
}

LossAndGradient calibration_loss(const CalibrationModel& model, const AlrDesign& design) {
    require(model.c == design.c, ErrorKind::DimensionMismatch, "model and data class counts differ");
    require(design.rows() > 0, ErrorKind::EmptyDataset, "calibration loss needs at least one row");
    const auto d = static_cast<Eigen::Index>(model.dim());
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);

    Eigen::MatrixXd grad_a = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd grad_b = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd zc(d);
    Eigen::VectorXd resid(d);
    double loss = 0.0;

    for (Eigen::Index i = 0; i < design.z.rows(); ++i) {
        const auto z = design.z.row(i).transpose();
        zc.noalias() = model.A * z;
        zc += model.b;
        // Logits are (zc, 0); log-sum-exp with max subtraction.
        const double top = std::max(0.0, zc.maxCoeff());
        double sum = std::exp(-top);
        for (Eigen::Index k = 0; k < d; ++k) {
            resid(k) = std::exp(zc(k) - top);
            sum += resid(k);
        }
        const double lse = top + std::log(sum);
        const std::size_t y = design.labels[static_cast<std::size_t>(i)];
        const double logit_y = y + 1 < model.c ? zc(static_cast<Eigen::Index>(y)) : 0.0;
        const double log_p = logit_y - lse;
        if (!std::isfinite(log_p) || std::exp(log_p) == 0.0) {
            throw Error(ErrorKind::NumericalUnderflow,
                        "calibrated probability of the label underflowed at row " + std::to_string(i));
        }
        loss -= log_p;

        resid /= sum;
        if (y + 1 < model.c) resid(static_cast<Eigen::Index>(y)) -= 1.0;
        grad_a.noalias() += resid * z.transpose();
        grad_b += resid;
    }

    const Eigen::MatrixXd a_dev = model.A - I;
    loss += model.lambda1 * a_dev.squaredNorm() + model.lambda2 * model.b.squaredNorm();
    grad_a += 2.0 * model.lambda1 * a_dev;
    grad_b += 2.0 * model.lambda2 * model.b;

    LossAndGradient out;
    out.loss = loss;
    out.gradient.resize(d * d + d);
    for (Eigen::Index r = 0; r < d; ++r) {
        for (Eigen::Index col = 0; col < d; ++col) out.gradient(r * d + col) = grad_a(r, col);
    }
    out.gradient.tail(d) = grad_b;
    return out;
}

LossAndGradient calibration_loss(const CalibrationModel& model, const LabeledDataset& data) {
    require(!data.empty(), ErrorKind::EmptyDataset, "calibration loss needs at least one row");
    require(model.c == data.classes(), ErrorKind::DimensionMismatch, "model and data class counts differ");
    return calibration_loss(model, AlrDesign::build(data, InteriorConfig{model.epsilon}));
}

CalibrationModel fit_geometric(const LabeledDataset& data, const FitConfig& cfg,
                               const std::optional<CalibrationModel>& init, std::vector<double>* loss_history) {
    cfg.validate();
    const std::size_t c = data.classes();
    CalibrationModel model = init.value_or(CalibrationModel::identity(c, cfg.interior.epsilon));
    require(model.c == c, ErrorKind::DimensionMismatch, "initial model has a different class count");
    model.validate();
    model.lambda1 = cfg.lambda1;
    model.lambda2 = cfg.lambda2;
    model.epsilon = cfg.interior.epsilon;
    model.trace_constraint = cfg.trace_constraint;

    const std::size_t params = model.parameter_count();
    if (data.size() < params) {
        throw Error(ErrorKind::InsufficientData, "fit needs at least " + std::to_string(params) + " rows, got " +
                                                     std::to_string(data.size()));
    }

    const AlrDesign design = AlrDesign::build(data, cfg.interior);
    const double n = static_cast<double>(design.rows());

    // Minimize loss / n: same minimizer, gradient tolerance on a per-row scale.
    CalibrationModel work = model;
    // A trial step that underflows a label probability is rejected by the line search.
    const Objective objective = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
        work.unflatten(theta);
        try {
            LossAndGradient lg = calibration_loss(work, design);
            grad = lg.gradient / n;
            return lg.loss / n;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NumericalUnderflow) throw;
            return std::numeric_limits<double>::infinity();
        }
    };

    LbfgsOptions options;
    options.max_iterations = cfg.max_iterations;
    options.gradient_tolerance = cfg.gradient_tolerance;
    const LbfgsResult result = minimize_lbfgs(objective, model.flatten(), options);

    model.unflatten(result.x);
    if (cfg.trace_constraint) {
        const double d = static_cast<double>(model.dim());
        const double shift = (d - model.A.trace()) / d;
        model.A.diagonal().array() += shift;
    }

    const LossAndGradient final_state = calibration_loss(model, design);
    model.fit_info.iterations = result.iterations;
    model.fit_info.final_loss = final_state.loss;
    model.fit_info.converged = result.converged;
    model.fit_info.gradient_norm = final_state.gradient.norm() / n;
    model.fit_info.min_eig_sym_A = min_eig_symmetric_part(model.A);
    model.fit_info.min_real_eig_A = min_real_eigenvalue(model.A);
    model.fit_info.small_sample = data.size() < 10 * params;

    if (loss_history != nullptr) {
        loss_history->clear();
        for (double v : result.history) loss_history->push_back(v * n);
    }

    if (!model.A.allFinite() || !model.b.allFinite()) {
        throw Error(ErrorKind::NumericalUnderflow, "fit produced non-finite parameters");
    }
    if (model.fit_info.min_eig_sym_A <= cfg.delta) {
        throw Error(ErrorKind::NotPositiveDefinite,
                    "smallest eigenvalue of the symmetric part of A is " +
                        std::to_string(model.fit_info.min_eig_sym_A) + " <= delta " + std::to_string(cfg.delta));
    }
    return model;
}

ProbVector apply_calibration(const CalibrationModel& model, const ProbVector& p) {
    if (p.size() != model.c) {
        throw Error(ErrorKind::DimensionMismatch, "input has " + std::to_string(p.size()) +
                                                      " classes, model expects " + std::to_string(model.c));
    }
    const AlrVector z = alr(clip(p, InteriorConfig{model.epsilon}));
    const auto d = static_cast<Eigen::Index>(model.dim());
    const Eigen::Map<const Eigen::VectorXd> zv(z.values().data(), d);
    const Eigen::VectorXd zc = model.A * zv + model.b;
    return alr_inverse(std::span<const double>(zc.data(), static_cast<std::size_t>(d)));
}

std::vector<ProbVector> apply_calibration(const CalibrationModel& model, const std::vector<ProbVector>& ps) {
    std::vector<ProbVector> out;
    out.reserve(ps.size());
    for (const auto& p : ps) out.push_back(apply_calibration(model, p));
    return out;
}

Eigen::MatrixXd penalty_hessian(std::size_t c, double lambda1, double lambda2) {
    require(c >= 2, ErrorKind::InvalidArgument, "class count must be at least 2");
    const auto d = static_cast<Eigen::Index>(c - 1);
    Eigen::VectorXd diag(d * d + d);
    diag.head(d * d).setConstant(2.0 * lambda1);
    diag.tail(d).setConstant(2.0 * lambda2);
    return diag.asDiagonal();
}

double min_eig_symmetric_part(const Eigen::MatrixXd& a) {
    const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

double min_real_eigenvalue(const Eigen::MatrixXd& a) {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(a, false);
    return solver.eigenvalues().real().minCoeff();
}

double parameter_distance(const CalibrationModel& lhs, const CalibrationModel& rhs) {
    require(lhs.c == rhs.c, ErrorKind::DimensionMismatch, "models have different class counts");
    return std::sqrt((lhs.A - rhs.A).squaredNorm() + (lhs.b - rhs.b).squaredNorm());
}

}  // namespace geocal

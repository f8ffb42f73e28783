#include "geocal/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "geocal/error.hpp"

namespace geocal {
namespace {

void check_raw(std::span<const double> raw) {
    require(raw.size() >= 2, ErrorKind::InvalidProbability, "probability vector needs at least 2 entries");
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (!std::isfinite(raw[i])) {
            throw Error(ErrorKind::InvalidProbability, "entry " + std::to_string(i) + " is not finite");
        }
        if (raw[i] < -kNegativeTolerance) {
            throw Error(ErrorKind::InvalidProbability,
                        "entry " + std::to_string(i) + " is negative (" + std::to_string(raw[i]) + ")");
        }
    }
    const double sum = std::accumulate(raw.begin(), raw.end(), 0.0);
    if (std::abs(sum - 1.0) > kRawSumTolerance) {
        throw Error(ErrorKind::InvalidProbability, "entries sum to " + std::to_string(sum) + ", expected 1");
    }
}

void check_same_size(const ProbVector& p, const ProbVector& q) {
    if (p.size() != q.size()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "lengths " + std::to_string(p.size()) + " and " + std::to_string(q.size()));
    }
}

double clamped_arccos(double x) { return std::acos(std::clamp(x, 0.0, 1.0)); }

}  // namespace

ProbVector::ProbVector(std::vector<double> values) : values_(std::move(values)) {
    require(values_.size() >= 2, ErrorKind::InvalidProbability,
            "probability vector needs at least 2 entries");
    double sum = 0.0;
    for (double& v : values_) {
        if (!std::isfinite(v) || v < -kNegativeTolerance) {
            throw Error(ErrorKind::InvalidProbability, "entry out of range: " + std::to_string(v));
        }
        if (v < 0.0) v = 0.0;  // rounding noise only
        sum += v;
    }
    if (std::abs(sum - 1.0) > kSumTolerance) {
        throw Error(ErrorKind::InvalidProbability, "entries sum to " + std::to_string(sum));
    }
}

ProbVector ProbVector::vertex(std::size_t c, std::size_t j) {
    require(j < c, ErrorKind::IndexOutOfRange, "vertex index out of range");
    std::vector<double> v(c, 0.0);
    v[j] = 1.0;
    return ProbVector(std::move(v));
}

ProbVector ProbVector::uniform(std::size_t c) {
    return ProbVector(std::vector<double>(c, 1.0 / static_cast<double>(c)));
}

AlrVector::AlrVector(std::vector<double> values) : values_(std::move(values)) {
    require(!values_.empty(), ErrorKind::InvalidArgument, "ALR vector must be nonempty");
    for (double v : values_) {
        require(std::isfinite(v), ErrorKind::InvalidArgument, "ALR coordinate is not finite");
    }
}

void InteriorConfig::validate(std::size_t c) const {
    require(epsilon > 0.0 && static_cast<double>(c - 1) * epsilon < 1.0, ErrorKind::InvalidArgument,
            "epsilon must satisfy 0 < epsilon and (c-1)*epsilon < 1");
}

ProbVector normalize(std::span<const double> raw) {
    check_raw(raw);
    std::vector<double> out(raw.begin(), raw.end());
    double sum = 0.0;
    for (double& v : out) {
        v = std::max(v, 0.0);
        sum += v;
    }
    for (double& v : out) v /= sum;
    return ProbVector(std::move(out));
}

ProbVector normalize_and_clip(std::span<const double> raw, const InteriorConfig& cfg) {
    check_raw(raw);
    cfg.validate(raw.size());
    std::vector<double> out(raw.begin(), raw.end());
    double sum = 0.0;
    for (double& v : out) {
        v = std::max(v, cfg.epsilon);
        sum += v;
    }
    for (double& v : out) v /= sum;
    return ProbVector(std::move(out));
}

ProbVector clip(const ProbVector& p, const InteriorConfig& cfg) {
    return normalize_and_clip(p.values(), cfg);
}

double bhattacharyya_coefficient(const ProbVector& p, const ProbVector& q) {
    check_same_size(p, q);
    double bc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) bc += std::sqrt(p[i] * q[i]);
    return std::clamp(bc, 0.0, 1.0);
}

double fisher_rao_distance(const ProbVector& p, const ProbVector& q) {
    // Rounding leaves BC(p, p) a few ulps below 1, which arccos magnifies to ~1e-8.
    if (p == q) return 0.0;
    return 2.0 * clamped_arccos(bhattacharyya_coefficient(p, q));
}

double distance_to_vertex(const ProbVector& p, std::size_t j) {
    if (j >= p.size()) {
        throw Error(ErrorKind::IndexOutOfRange,
                    "class " + std::to_string(j) + " of " + std::to_string(p.size()));
    }
    return 2.0 * clamped_arccos(std::sqrt(p[j]));
}

AlrVector alr(const ProbVector& p) {
    const std::size_t c = p.size();
    const double ref = p[c - 1];
    std::vector<double> z(c - 1);
    for (std::size_t k = 0; k + 1 < c; ++k) {
        if (p[k] <= 0.0 || ref <= 0.0) {
            throw Error(ErrorKind::BoundaryPoint, "zero entry in ALR input; clip upstream");
        }
        z[k] = std::log(p[k] / ref);
    }
    return AlrVector(std::move(z));
}

ProbVector alr_inverse(std::span<const double> z) {
    require(!z.empty(), ErrorKind::InvalidArgument, "ALR vector must be nonempty");
    const double top = std::max(0.0, *std::max_element(z.begin(), z.end()));
    std::vector<double> out(z.size() + 1);
    double sum = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
        require(std::isfinite(z[k]), ErrorKind::InvalidArgument, "ALR coordinate is not finite");
        out[k] = std::exp(z[k] - top);
        sum += out[k];
    }
    out.back() = std::exp(-top);
    sum += out.back();
    for (double& v : out) v /= sum;
    return ProbVector(std::move(out));
}

std::size_t argmax_class(std::span<const double> p) noexcept {
    std::size_t best = 0;
    for (std::size_t i = 1; i < p.size(); ++i) {
        if (p[i] > p[best]) best = i;
    }
    return best;
}

}  // namespace geocal

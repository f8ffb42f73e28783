#pragma once

// Geometry of the probability simplex: validation, Fisher-Rao distances,
// the additive log-ratio (ALR) transform pair and Bhattacharyya overlap.
//
// Class indices are zero-based. The ALR reference class is the last index.

#include <cstddef>
#include <span>
#include <vector>

namespace geocal {

inline constexpr double kPi = 3.14159265358979323846;

// Tolerance on |sum - 1| for a constructed ProbVector.
inline constexpr double kSumTolerance = 1e-9;
// Negative entries down to this value are treated as rounding noise.
inline constexpr double kNegativeTolerance = 1e-9;
// Raw rows whose sum is further than this from 1 are rejected as malformed.
inline constexpr double kRawSumTolerance = 0.01;

// A point on the simplex: c >= 2 nonnegative entries summing to 1.
class ProbVector {
public:
    ProbVector() = default;

    // Validates without modifying; throws InvalidProbability on violation.
    explicit ProbVector(std::vector<double> values);

    // The j-th vertex e_j of the (c-1)-simplex.
    static ProbVector vertex(std::size_t c, std::size_t j);
    static ProbVector uniform(std::size_t c);

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const noexcept { return values_[i]; }
    std::span<const double> values() const noexcept { return values_; }

    friend bool operator==(const ProbVector&, const ProbVector&) = default;

private:
    std::vector<double> values_;
};

// Log-ratio coordinates log(p_k / p_c), k = 0..c-2.
class AlrVector {
public:
    AlrVector() = default;
    explicit AlrVector(std::vector<double> values);

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const noexcept { return values_[i]; }
    std::span<const double> values() const noexcept { return values_; }

private:
    std::vector<double> values_;
};

struct InteriorConfig {
    double epsilon = 1e-6;

    // epsilon > 0 and (c-1) * epsilon < 1.
    void validate(std::size_t c) const;
};

// Rejects negative or non-finite entries and rows whose sum is off by more
// than kRawSumTolerance, then divides by the sum. Zeros are kept.
ProbVector normalize(std::span<const double> raw);

// Entrywise max(value, epsilon) followed by division by the sum.
ProbVector normalize_and_clip(std::span<const double> raw, const InteriorConfig& cfg);
ProbVector clip(const ProbVector& p, const InteriorConfig& cfg);

double bhattacharyya_coefficient(const ProbVector& p, const ProbVector& q);

// 2 * arccos(BC(p, q)) in radians, within [0, pi].
double fisher_rao_distance(const ProbVector& p, const ProbVector& q);

// Closed form 2 * arccos(sqrt(p_j)) for the distance to vertex e_j.
double distance_to_vertex(const ProbVector& p, std::size_t j);

// Throws BoundaryPoint if any entry is zero.
AlrVector alr(const ProbVector& p);

// softmax(z_0, ..., z_{c-2}, 0) with max-subtraction.
ProbVector alr_inverse(std::span<const double> z);
inline ProbVector alr_inverse(const AlrVector& z) { return alr_inverse(z.values()); }

// Index of the largest entry; ties resolve to the lowest index.
std::size_t argmax_class(std::span<const double> p) noexcept;
inline std::size_t argmax_class(const ProbVector& p) noexcept { return argmax_class(p.values()); }

}  // namespace geocal

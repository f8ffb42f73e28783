#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "geocal/dataset.hpp"
#include "geocal/rng.hpp"
#include "geocal/simplex.hpp"

namespace testing {

// Dirichlet(1, ..., 1) draw; with power > 1 the mass is pushed toward a vertex.
inline std::vector<double> random_simplex(geocal::Rng& rng, std::size_t c, double power = 1.0) {
    std::vector<double> v(c);
    double sum = 0.0;
    for (double& x : v) {
        x = std::pow(rng.exponential(), power);
        sum += x;
    }
    for (double& x : v) x /= sum;
    return v;
}

inline geocal::ProbVector random_prob(geocal::Rng& rng, std::size_t c, double power = 1.0) {
    return geocal::normalize(random_simplex(rng, c, power));
}

// Labels drawn from the probabilities themselves, so the data are calibrated.
inline geocal::LabeledDataset calibrated_dataset(std::size_t n, std::size_t c, std::uint64_t seed,
                                                 double power = 1.0) {
    geocal::Rng rng(seed);
    geocal::LabeledDataset data(c);
    for (std::size_t i = 0; i < n; ++i) {
        const geocal::ProbVector p = random_prob(rng, c, power);
        const double u = rng.uniform();
        std::size_t y = c - 1;
        double cum = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            cum += p[j];
            if (u < cum) {
                y = j;
                break;
            }
        }
        data.add(p, y);
    }
    return data;
}

inline std::vector<double> to_row(const geocal::ProbVector& p) { return {p.values().begin(), p.values().end()}; }

}  // namespace testing

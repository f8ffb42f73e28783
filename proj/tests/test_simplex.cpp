#include "doctest.h"

#include <cmath>
#include <vector>

#include "geocal/error.hpp"
#include "geocal/rng.hpp"
#include "geocal/simplex.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace geocal;

namespace {

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an exception");
    return ErrorKind::IoError;
}

}  // namespace

TEST_CASE("ProbVector validation") {
    CHECK_NOTHROW(ProbVector({0.2, 0.3, 0.5}));
    CHECK(kind_of([] { ProbVector({1.0}); }) == ErrorKind::InvalidProbability);
    CHECK(kind_of([] { ProbVector({0.5, 0.6}); }) == ErrorKind::InvalidProbability);
    CHECK(kind_of([] { ProbVector({0.5, NAN}); }) == ErrorKind::InvalidProbability);
    CHECK(kind_of([] { ProbVector({1.5, -0.5}); }) == ErrorKind::InvalidProbability);
    // Rounding-level negatives are absorbed.
    const ProbVector p({1.0 + 1e-12, -1e-12});
    CHECK(p[1] == 0.0);
    CHECK(ProbVector::vertex(3, 2) == ProbVector({0.0, 0.0, 1.0}));
    CHECK(kind_of([] { ProbVector::vertex(3, 3); }) == ErrorKind::IndexOutOfRange);
}

TEST_CASE("normalize_and_clip") {
    const InteriorConfig tiny{1e-6};
    const std::vector<double> interior{0.2, 0.3, 0.5};
    const ProbVector same = normalize_and_clip(interior, tiny);
    for (std::size_t j = 0; j < 3; ++j) CHECK(same[j] == doctest::Approx(interior[j]).epsilon(1e-15));

    const std::vector<double> edge{1.0, 0.0};
    const ProbVector clipped = normalize_and_clip(edge, InteriorConfig{0.01});
    CHECK(clipped[0] == doctest::Approx(1.0 / 1.01).epsilon(1e-15));
    CHECK(clipped[1] == doctest::Approx(0.01 / 1.01).epsilon(1e-15));

    const std::vector<double> negative{0.5, -0.2, 0.7};
    CHECK(kind_of([&] { normalize_and_clip(negative, tiny); }) == ErrorKind::InvalidProbability);
    const std::vector<double> off{0.5, 0.6};
    CHECK(kind_of([&] { normalize_and_clip(off, tiny); }) == ErrorKind::InvalidProbability);
    const std::vector<double> slightly_off{0.5, 0.505};
    CHECK_NOTHROW(normalize_and_clip(slightly_off, tiny));

    // A second pass lifts the floor entry again but keeps the ordering.
    const ProbVector twice = clip(clipped, InteriorConfig{0.01});
    CHECK(twice[1] == doctest::Approx(0.01 / (1.0 / 1.01 + 0.01)).epsilon(1e-15));
    CHECK(twice[0] > twice[1]);
    const ProbVector interior_twice = clip(same, tiny);
    for (std::size_t j = 0; j < 3; ++j) CHECK(interior_twice[j] == doctest::Approx(same[j]).epsilon(1e-15));

    CHECK(kind_of([] { InteriorConfig{0.5}.validate(3); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([] { InteriorConfig{0.0}.validate(3); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("Fisher-Rao distance examples") {
    CHECK(fisher_rao_distance(ProbVector::vertex(2, 0), ProbVector::vertex(2, 1)) == kPi);
    const ProbVector p({0.25, 0.75});
    const ProbVector q({0.75, 0.25});
    CHECK(fisher_rao_distance(p, q) == doctest::Approx(kPi / 3.0).epsilon(1e-14));
    CHECK(fisher_rao_distance(p, p) == 0.0);
    CHECK(kind_of([&] { fisher_rao_distance(p, ProbVector::uniform(3)); }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("distance to vertex") {
    CHECK(distance_to_vertex(ProbVector::vertex(3, 0), 0) == 0.0);
    CHECK(distance_to_vertex(ProbVector({0.25, 0.75}), 0) == doctest::Approx(2.0 * kPi / 3.0).epsilon(1e-14));
    CHECK(distance_to_vertex(ProbVector({0.5, 0.5}), 0) == doctest::Approx(kPi / 2.0).epsilon(1e-14));
    CHECK(kind_of([] { distance_to_vertex(ProbVector({0.5, 0.5}), 2); }) == ErrorKind::IndexOutOfRange);

    Rng rng(3);
    for (int t = 0; t < 1000; ++t) {
        const ProbVector p = testing::random_prob(rng, 4);
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(std::abs(distance_to_vertex(p, j) - fisher_rao_distance(p, ProbVector::vertex(4, j))) < 1e-12);
        }
    }
}

TEST_CASE("Fisher-Rao against the sphere-embedding oracle") {
    Rng rng(11);
    for (int t = 0; t < 2000; ++t) {
        const std::size_t c = 2 + static_cast<std::size_t>(rng.index(5));
        const ProbVector p = testing::random_prob(rng, c, 2.0);
        const ProbVector q = testing::random_prob(rng, c, 2.0);
        const double d = fisher_rao_distance(p, q);
        CHECK(std::abs(d - oracle::fisher_rao(testing::to_row(p), testing::to_row(q))) < 1e-7);
        CHECK(std::abs(d - fisher_rao_distance(q, p)) < 1e-15);
        CHECK(d >= 0.0);
        CHECK(d <= kPi);
    }
}

TEST_CASE("Bhattacharyya coefficient") {
    CHECK(bhattacharyya_coefficient(ProbVector({0.64, 0.36}), ProbVector::vertex(2, 0)) ==
          doctest::Approx(0.8).epsilon(1e-15));
    const ProbVector p({0.25, 0.75});
    CHECK(bhattacharyya_coefficient(p, p) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(bhattacharyya_coefficient(p, ProbVector({0.75, 0.25})) ==
          doctest::Approx(std::sqrt(3.0) / 2.0).epsilon(1e-15));
    CHECK(kind_of([&] { bhattacharyya_coefficient(p, ProbVector::uniform(3)); }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("ALR transform pair") {
    const AlrVector z = alr(ProbVector({0.5, 0.25, 0.25}));
    CHECK(z[0] == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(z[1] == 0.0);
    const AlrVector zero = alr(ProbVector::uniform(3));
    CHECK(zero[0] == 0.0);
    CHECK(zero[1] == 0.0);
    const AlrVector binary = alr(ProbVector({0.8, 0.2}));
    CHECK(binary[0] == doctest::Approx(std::log(4.0)).epsilon(1e-15));
    CHECK(binary[0] == doctest::Approx(std::log(0.8 / (1.0 - 0.8))).epsilon(1e-15));

    const std::vector<double> origin{0.0, 0.0};
    const ProbVector u = alr_inverse(origin);
    for (std::size_t j = 0; j < 3; ++j) CHECK(u[j] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    const std::vector<double> ln2{std::log(2.0), 0.0};
    const ProbVector back = alr_inverse(ln2);
    CHECK(back[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(back[1] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(back[2] == doctest::Approx(0.25).epsilon(1e-15));

    CHECK(kind_of([] { alr(ProbVector({1.0, 0.0})); }) == ErrorKind::BoundaryPoint);

    // Large coordinates do not overflow.
    const std::vector<double> huge{800.0, -800.0};
    const ProbVector h = alr_inverse(huge);
    CHECK(h[0] == doctest::Approx(1.0));

    Rng rng(5);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const ProbVector p = clip(testing::random_prob(rng, 4, 3.0), InteriorConfig{1e-6});
        const AlrVector zz = alr(p);
        const AlrVector again = alr(alr_inverse(zz));
        for (std::size_t k = 0; k < zz.size(); ++k) worst = std::max(worst, std::abs(zz[k] - again[k]));
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("argmax tie-breaking") {
    CHECK(argmax_class(ProbVector({0.2, 0.5, 0.3})) == 1);
    CHECK(argmax_class(ProbVector({0.5, 0.5})) == 0);
    CHECK(argmax_class(ProbVector::uniform(3)) == 0);
    CHECK(argmax_class(ProbVector({0.2, 0.4, 0.4})) == 1);
}

TEST_CASE("equal entries are equidistant from their vertices") {
    const ProbVector p({0.4, 0.4, 0.2});
    CHECK(distance_to_vertex(p, 0) == distance_to_vertex(p, 1));
}

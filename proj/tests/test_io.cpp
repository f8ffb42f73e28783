#include "doctest.h"

#include <sstream>
#include <string>

#include "geocal/analysis.hpp"
#include "geocal/error.hpp"
#include "geocal/io.hpp"

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

ProbabilityTable parse(const std::string& text, bool labels) {
    std::istringstream in(text);
    return parse_probability_csv(in, labels);
}

std::string error_message(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("probability CSV parsing") {
    const ProbabilityTable t = parse("# tool: x\np0,p1,p2,label\n0.2,0.3,0.5,2\n\n1,0,0,0\n", true);
    CHECK(t.c == 3);
    CHECK(t.has_labels);
    REQUIRE(t.probs.size() == 2);
    CHECK(t.labels == std::vector<std::size_t>{2, 0});
    CHECK(t.probs[0][2] == 0.5);

    const ProbabilityTable unlabeled = parse("p0,p1\n0.4,0.6\n", false);
    CHECK_FALSE(unlabeled.has_labels);
    CHECK(unlabeled.labels.empty());

    // Sums within 1% are renormalized.
    const ProbabilityTable loose = parse("p0,p1\n0.5,0.504\n", false);
    CHECK(loose.probs[0][0] + loose.probs[0][1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("probability CSV errors") {
    CHECK(kind_of([] { parse("p0,p1\n0.4,0.6\n", true); }) == ErrorKind::ParseError);
    CHECK(kind_of([] { parse("q0,q1\n0.4,0.6\n", false); }) == ErrorKind::ParseError);
    CHECK(kind_of([] { parse("p0,p1,label\n0.4,abc,1\n", true); }) == ErrorKind::ParseError);
    CHECK(kind_of([] { parse("p0,p1,label\n0.4,0.6\n", true); }) == ErrorKind::ParseError);
    CHECK(kind_of([] { parse("p0,p1,label\n0.4,0.6,2\n", true); }) == ErrorKind::ParseError);
    CHECK(kind_of([] { parse("p0,p1,label\n0.4,0.7,1\n", true); }) == ErrorKind::ParseError);
    CHECK(parse("p0,p1,label\n", true).probs.empty());
    CHECK(kind_of([] { parse("# only a comment\n", true); }) == ErrorKind::ParseError);
    CHECK(error_message([] { parse("p0,p1,label\n0.4,0.6,1\n0.5,x,0\n", true); }).find("line 3") != std::string::npos);
    CHECK(kind_of([] { read_probability_csv("/nonexistent/file.csv", true); }) == ErrorKind::IoError);
}

TEST_CASE("dataset CSV round trip is exact") {
    SyntheticSpec spec;
    spec.n = 200;
    const LabeledDataset data = generate_synthetic(spec);
    std::ostringstream out;
    write_dataset_csv(out, data, {{"tool", "geocal"}});
    CHECK(out.str().rfind("# tool: geocal", 0) == 0);
    const LabeledDataset back = to_dataset(parse(out.str(), true));
    REQUIRE(back.size() == data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        CHECK(back[i].label == data[i].label);
        for (std::size_t j = 0; j < 3; ++j) CHECK(back[i].probs[j] == doctest::Approx(data[i].probs[j]).epsilon(1e-15));
    }
}

TEST_CASE("format_double round-trips") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 0.22885990155104086}) {
        CHECK(std::stod(format_double(v)) == v);
    }
}

TEST_CASE("sha256") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("model JSON round trip") {
    CalibrationModel m = CalibrationModel::identity(3);
    m.A << 1.1, 0.2, -0.1, 0.9;
    m.b << 0.3, -0.2;
    m.lambda1 = 0.05;
    m.fit_info.iterations = 12;
    m.fit_info.converged = true;
    const ReliabilityPolicy policy{1.0, 0.5, 0.05};
    const auto j = model_to_json(m, policy, {{"tool", "geocal"}});
    CHECK(j["kind"] == "geometric");
    CHECK(j["format_version"] == kFormatVersion);
    const StoredModel back = model_from_json(nlohmann::json::parse(j.dump()));
    CHECK(back.model.A == m.A);
    CHECK(back.model.b == m.b);
    CHECK(back.model.lambda1 == 0.05);
    CHECK(back.model.fit_info.iterations == 12);
    CHECK(back.policy.tau_star == 0.5);

    auto broken = nlohmann::json::parse(j.dump());
    broken["A"] = {{1.0}};
    CHECK(kind_of([&] { model_from_json(broken); }) == ErrorKind::ParseError);
    broken = nlohmann::json::parse(j.dump());
    broken["format_version"] = 99;
    CHECK(kind_of([&] { model_from_json(broken); }) == ErrorKind::ParseError);
    broken = nlohmann::json::parse(j.dump());
    broken.erase("policy");
    CHECK(kind_of([&] { model_from_json(broken); }) == ErrorKind::ParseError);
}

TEST_CASE("saved models reproduce outputs bit for bit") {
    SyntheticSpec spec;
    spec.n = 1500;
    spec.true_map = temperature_distortion(3, 2.0);
    const LabeledDataset data = generate_synthetic(spec);
    const auto probs = data.probabilities();

    const CalibrationModel geo = fit_geometric(data, FitConfig{});
    const StoredModel geo_back = model_from_json(nlohmann::json::parse(model_to_json(geo, ReliabilityPolicy{1.0, 0.5, 0.05}, {}).dump()));
    for (const auto& p : probs) CHECK(apply_calibration(geo_back.model, p) == apply_calibration(geo, p));

    for (BaselineKind kind : {BaselineKind::Temperature, BaselineKind::PlattOvR, BaselineKind::Isotonic}) {
        const BaselineModel m = fit_baseline(kind, data);
        const auto j = baseline_to_json(m, {{"tool", "geocal"}});
        CHECK(j["kind"] == std::string(to_string(kind)));
        const BaselineModel back = baseline_from_json(nlohmann::json::parse(j.dump()));
        CHECK(back.kind == kind);
        for (const auto& p : probs) CHECK(baseline_apply(back, p) == baseline_apply(m, p));
    }

    auto broken = nlohmann::json::parse(baseline_to_json(fit_baseline(BaselineKind::PlattOvR, data), {}).dump());
    broken["platt"].erase(0);
    CHECK(kind_of([&] { baseline_from_json(broken); }) == ErrorKind::ParseError);
    broken["kind"] = "beta";
    CHECK(kind_of([&] { baseline_from_json(broken); }) == ErrorKind::ParseError);
}

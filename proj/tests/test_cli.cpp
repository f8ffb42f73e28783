#include "doctest.h"

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "geocal/cli.hpp"
#include "geocal/io.hpp"

using namespace geocal;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run run(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    Run r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("geocal_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string p(const fs::path& path) { return path.string(); }

}  // namespace

TEST_CASE("exit codes by error kind") {
    CHECK(exit_code_for(ErrorKind::ParseError) == kExitInput);
    CHECK(exit_code_for(ErrorKind::InvalidProbability) == kExitInput);
    CHECK(exit_code_for(ErrorKind::NoFeasibleThreshold) == kExitInfeasible);
    CHECK(exit_code_for(ErrorKind::NotPositiveDefinite) == kExitInfeasible);
    CHECK(exit_code_for(ErrorKind::NumericalUnderflow) == kExitInternal);
}

TEST_CASE("sample-size") {
    const Run r = run({"sample-size", "--lambda", "1", "--t", "0.1", "--delta", "0.01"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["n_ours"] == 61);
    CHECK(j["n_naive"] == 654);
    CHECK(run({"sample-size", "--lambda", "1", "--t", "2", "--delta", "0.01"}).code == kExitInput);
}

TEST_CASE("simulate, fit, apply, evaluate, pareto") {
    const fs::path dir = scratch("pipeline");
    const std::string data = p(dir / "data.csv");
    REQUIRE(run({"simulate", "--n", "1500", "--c", "3", "--temperature", "2", "--concentration", "0.25", "--seed", "3",
                 "--out", data})
                .code == 0);
    const std::string text = read_text_file(data);
    CHECK(text.find("# tool: geocal") != std::string::npos);
    CHECK(text.find("p0,p1,p2,label") != std::string::npos);

    const std::string model = p(dir / "model.json");
    const Run fit = run({"fit", "--data", data, "--out", model});
    REQUIRE(fit.code == 0);
    const auto summary = nlohmann::json::parse(fit.out);
    CHECK(summary["train_automated_error_rate"].get<double>() <= 0.05);
    const auto stored = nlohmann::json::parse(read_text_file(model));
    CHECK(stored["metadata"]["inputs"]["data"]["sha256"] == sha256_file(data));
    CHECK(stored["metadata"]["command"] == "fit");

    const std::string applied = p(dir / "applied.csv");
    REQUIRE(run({"apply", "--model", model, "--data", data, "--out", applied}).code == 0);
    const std::string rows = read_text_file(applied);
    CHECK(rows.find("p_cal_0,p_cal_1,p_cal_2,predicted_class,reliability,decision") != std::string::npos);
    CHECK(rows.find("automate") != std::string::npos);
    CHECK(rows.find("defer") != std::string::npos);

    const fs::path report_dir = dir / "report";
    const Run eval = run({"evaluate", "--data", data, "--model", model, "--out-dir", p(report_dir)});
    REQUIRE(eval.code == 0);
    for (const char* f : {"report.json", "diagram.csv", "roc.csv", "pr.csv"}) CHECK(fs::exists(report_dir / f));
    const auto report = nlohmann::json::parse(read_text_file(p(report_dir / "report.json")));
    CHECK(report["auc"].get<double>() > 0.5);
    CHECK(report["confusion"].size() == 3);

    const Run pareto = run({"pareto", "--data", data, "--model", model});
    CHECK(pareto.code == 0);
    CHECK(pareto.out.find("deferral_rate") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("input errors map to exit 2") {
    const fs::path dir = scratch("errors");
    const std::string bad = p(dir / "bad.csv");
    write_text_file(bad, "p0,p1,label\n0.4,0.7,1\n");
    const Run r = run({"fit", "--data", bad, "--out", p(dir / "m.json")});
    CHECK(r.code == kExitInput);
    CHECK(r.err.find("line 2") != std::string::npos);
    CHECK(run({"fit", "--data", p(dir / "missing.csv"), "--out", p(dir / "m.json")}).code == kExitInput);
    CHECK(run({"no-such-command"}).code == kExitInput);
    CHECK(run({"fit", "--data", bad}).code == kExitInput);
    fs::remove_all(dir);
}

TEST_CASE("an unreachable alpha maps to exit 3") {
    const fs::path dir = scratch("infeasible");
    const std::string data = p(dir / "wrong.csv");
    std::string text = "p0,p1,label\n";
    for (int i = 0; i < 40; ++i) text += "0.9,0.1,1\n0.2,0.8,0\n";
    write_text_file(data, text);
    const Run r = run({"fit", "--data", data, "--out", p(dir / "m.json"), "--lambda1", "100", "--lambda2", "100"});
    CHECK(r.code == kExitInfeasible);
    fs::remove_all(dir);
}

TEST_CASE("outputs are byte-identical across runs") {
    const fs::path dir = scratch("determinism");
    const std::string a = p(dir / "a.csv");
    const std::string b = p(dir / "b.csv");
    REQUIRE(run({"simulate", "--n", "600", "--seed", "11", "--out", a}).code == 0);
    REQUIRE(run({"simulate", "--n", "600", "--seed", "11", "--out", b}).code == 0);
    CHECK(read_text_file(a) == read_text_file(b));

    REQUIRE(run({"fit", "--data", a, "--out", p(dir / "m1.json")}).code == 0);
    REQUIRE(run({"fit", "--data", a, "--out", p(dir / "m2.json")}).code == 0);
    CHECK(read_text_file(p(dir / "m1.json")) == read_text_file(p(dir / "m2.json")));

    const std::vector<std::string> boot{"bootstrap", "--data", a, "--sizes", "100,200", "--replicates", "8"};
    auto with = [&](std::vector<std::string> args, const std::string& out, const std::string& workers) {
        args.insert(args.end(), {"--out", out, "--workers", workers});
        return run(args).code;
    };
    REQUIRE(with(boot, p(dir / "b1.csv"), "1") == 0);
    REQUIRE(with(boot, p(dir / "b2.csv"), "1") == 0);
    REQUIRE(with(boot, p(dir / "b4.csv"), "4") == 0);
    CHECK(read_text_file(p(dir / "b1.csv")) == read_text_file(p(dir / "b2.csv")));
    CHECK(read_text_file(p(dir / "b1.csv")) == read_text_file(p(dir / "b4.csv")));
    fs::remove_all(dir);
}

TEST_CASE("audit and compare commands") {
    const Run audit = run({"audit", "--c", "3", "--input-floor", "0.1", "--norm-a", "1", "--norm-b", "0",
                           "--trials", "200"});
    REQUIRE(audit.code == 0);
    const auto j = nlohmann::json::parse(audit.out);
    CHECK(j["passed"] == true);

    const fs::path dir = scratch("compare");
    const std::string data = p(dir / "d.csv");
    REQUIRE(run({"simulate", "--n", "1000", "--temperature", "2", "--concentration", "0.25", "--out", data}).code == 0);
    const Run cmp = run({"compare", "--data", data, "--methods", "uncalibrated,geometric"});
    CHECK(cmp.code == 0);
    CHECK(cmp.out.find("geometric") != std::string::npos);
    const Run cv = run({"cross-validate", "--data", data, "--k", "5"});
    CHECK(cv.code == 0);
    fs::remove_all(dir);
}

TEST_CASE("fit and apply contracts") {
    const fs::path dir = scratch("contracts");
    const std::string data = p(dir / "train.csv");
    REQUIRE(run({"simulate", "--n", "800", "--c", "3", "--seed", "7", "--out", data}).code == 0);

    const std::string loose = p(dir / "loose.json");
    const Run fit = run({"fit", "--data", data, "--out", loose, "--alpha", "0.9999"});
    REQUIRE(fit.code == 0);
    const auto summary = nlohmann::json::parse(fit.out);
    CHECK(summary["converged"] == true);
    CHECK(summary["train_deferral_rate"].get<double>() == 0.0);

    // fit then apply on the training file keeps automated error within alpha.
    const std::string model = p(dir / "model.json");
    REQUIRE(run({"fit", "--data", data, "--out", model}).code == 0);
    const std::string applied = p(dir / "applied.csv");
    REQUIRE(run({"apply", "--model", model, "--data", data, "--out", applied}).code == 0);
    const ProbabilityTable train = read_probability_csv(data, true);
    std::istringstream rows(read_text_file(applied));
    std::string line;
    std::size_t row = 0;
    std::size_t automated = 0;
    std::size_t wrong = 0;
    bool header = false;
    while (std::getline(rows, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            header = true;
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
        REQUIRE(cells.size() == 6);
        if (cells[5] == "automate") {
            ++automated;
            if (std::stoul(cells[3]) != train.labels[row]) ++wrong;
        }
        ++row;
    }
    CHECK(row == train.probs.size());
    REQUIRE(automated > 0);
    CHECK(static_cast<double>(wrong) / static_cast<double>(automated) <= 0.05);

    // Hand-written model applied to a uniform row.
    nlohmann::ordered_json stored = nlohmann::ordered_json::parse(read_text_file(model));
    stored["A"] = {{0.988, -0.002}, {-0.044, 1.238}};
    stored["b"] = {-0.017, 0.636};
    const std::string fixed = p(dir / "fixed.json");
    write_text_file(fixed, stored.dump());
    const std::string uniform = p(dir / "uniform.csv");
    write_text_file(uniform, "p0,p1,p2\n0.3333333333333333,0.3333333333333333,0.3333333333333334\n");
    const Run out = run({"apply", "--model", fixed, "--data", uniform});
    REQUIRE(out.code == 0);
    const auto last = out.out.substr(out.out.rfind("\n", out.out.size() - 2) + 1);
    std::vector<double> cal;
    std::stringstream ss(last);
    for (std::string cell; std::getline(ss, cell, ',') && cal.size() < 3;) cal.push_back(std::stod(cell));
    REQUIRE(cal.size() == 3);
    CHECK(cal[0] == doctest::Approx(0.2539).epsilon(2e-4));
    CHECK(cal[1] == doctest::Approx(0.4878).epsilon(2e-4));
    CHECK(cal[2] == doctest::Approx(0.2583).epsilon(2e-4));

    const std::string two = p(dir / "two.csv");
    write_text_file(two, "p0,p1\n0.4,0.6\n");
    CHECK(run({"apply", "--model", model, "--data", two}).code == kExitInput);
    fs::remove_all(dir);
}

TEST_CASE("bootstrap table has one monotone row per size") {
    const fs::path dir = scratch("bootstrap");
    const std::string data = p(dir / "d.csv");
    REQUIRE(run({"simulate", "--n", "1241", "--seed", "9", "--out", data}).code == 0);
    const std::string table = p(dir / "t.csv");
    const Run r = run({"bootstrap", "--data", data, "--sizes", "100,250,500,750,1000", "--replicates", "100", "--out",
                       table});
    REQUIRE(r.code == 0);
    const auto summary = nlohmann::json::parse(r.out);
    REQUIRE(summary["table"].size() == 5);
    double last = 1e300;
    for (const auto& row : summary["table"]) {
        CHECK(row["mean_error"].get<double>() < last);
        last = row["mean_error"].get<double>();
    }
    CHECK(summary["slope"].get<double>() < 0.0);
    fs::remove_all(dir);
}

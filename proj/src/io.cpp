#include "geocal/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "geocal/error.hpp"

namespace geocal {
namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& what) {
    throw Error(ErrorKind::ParseError, fmt::format("line {}: {}", line_no, what));
}

double parse_real(std::string_view cell, std::size_t line_no) {
    double v = 0.0;
    const auto* end = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
    if (cell.empty() || ec != std::errc() || ptr != end) parse_fail(line_no, fmt::format("'{}' is not a number", cell));
    return v;
}

std::size_t parse_label(std::string_view cell, std::size_t line_no) {
    std::size_t v = 0;
    const auto* end = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
    if (cell.empty() || ec != std::errc() || ptr != end) {
        parse_fail(line_no, fmt::format("label '{}' is not a nonnegative integer", cell));
    }
    return v;
}

template <class Json>
Json at(const Json& j, const char* key) {
    if (!j.contains(key)) throw Error(ErrorKind::ParseError, fmt::format("model JSON lacks field '{}'", key));
    return j.at(key);
}

}  // namespace

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

ProbabilityTable parse_probability_csv(std::istream& in, bool require_labels) {
    ProbabilityTable table;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::vector<double> raw;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view view = trim(line);
        if (view.empty() || view.front() == '#') continue;
        const auto cells = split(view);
        if (!header_seen) {
            header_seen = true;
            table.has_labels = cells.back() == "label";
            const std::size_t c = cells.size() - (table.has_labels ? 1 : 0);
            if (c < 2) parse_fail(line_no, "header needs at least two probability columns p0,p1");
            for (std::size_t j = 0; j < c; ++j) {
                if (cells[j] != fmt::format("p{}", j)) {
                    parse_fail(line_no, fmt::format("expected column 'p{}', found '{}'", j, cells[j]));
                }
            }
            if (require_labels && !table.has_labels) parse_fail(line_no, "header lacks a 'label' column");
            table.c = c;
            continue;
        }
        const std::size_t expected = table.c + (table.has_labels ? 1 : 0);
        if (cells.size() != expected) {
            parse_fail(line_no, fmt::format("expected {} columns, found {}", expected, cells.size()));
        }
        raw.resize(table.c);
        for (std::size_t j = 0; j < table.c; ++j) raw[j] = parse_real(cells[j], line_no);
        try {
            table.probs.push_back(normalize(raw));
        } catch (const Error& e) {
            parse_fail(line_no, e.what());
        }
        if (table.has_labels) {
            const std::size_t label = parse_label(cells[table.c], line_no);
            if (label >= table.c) {
                parse_fail(line_no, fmt::format("label {} outside [0, {})", label, table.c));
            }
            table.labels.push_back(label);
        }
    }
    if (!header_seen) throw Error(ErrorKind::ParseError, "file has no header line");
    return table;
}

ProbabilityTable read_probability_csv(const std::string& path, bool require_labels) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, fmt::format("cannot open '{}'", path));
    try {
        return parse_probability_csv(in, require_labels);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::ParseError) throw;
        throw Error(ErrorKind::ParseError, fmt::format("{}: {}", path, e.what()));
    }
}

LabeledDataset to_dataset(const ProbabilityTable& table) {
    require(table.has_labels, ErrorKind::ParseError, "dataset file needs a label column");
    LabeledDataset data(table.c);
    for (std::size_t i = 0; i < table.probs.size(); ++i) data.add(table.probs[i], table.labels[i]);
    return data;
}

LabeledDataset read_dataset_csv(const std::string& path) { return to_dataset(read_probability_csv(path, true)); }

void write_comment_block(std::ostream& out, const nlohmann::ordered_json& metadata) {
    for (const auto& [key, value] : metadata.items()) {
        out << "# " << key << ": " << (value.is_string() ? value.get<std::string>() : value.dump()) << '\n';
    }
}

void write_dataset_csv(std::ostream& out, const LabeledDataset& data, const nlohmann::ordered_json& metadata) {
    write_comment_block(out, metadata);
    for (std::size_t j = 0; j < data.classes(); ++j) out << 'p' << j << ',';
    out << "label\n";
    for (const auto& row : data.rows()) {
        for (std::size_t j = 0; j < data.classes(); ++j) out << format_double(row.probs[j]) << ',';
        out << row.label << '\n';
    }
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorKind::IoError, "SHA-256 digest failed");
    }
    std::string hex;
    hex.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
    return hex;
}

std::string sha256_file(const std::string& path) { return sha256_hex(read_text_file(path)); }

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, fmt::format("cannot open '{}'", path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, fmt::format("cannot write '{}'", path));
    out << content;
    if (!out) throw Error(ErrorKind::IoError, fmt::format("write to '{}' failed", path));
}

nlohmann::ordered_json model_to_json(const CalibrationModel& model, const ReliabilityPolicy& policy,
                                     const nlohmann::ordered_json& metadata) {
    nlohmann::ordered_json j;
    j["format_version"] = kFormatVersion;
    j["kind"] = "geometric";
    j["c"] = model.c;
    auto a = nlohmann::ordered_json::array();
    for (Eigen::Index r = 0; r < model.A.rows(); ++r) {
        auto row = nlohmann::ordered_json::array();
        for (Eigen::Index col = 0; col < model.A.cols(); ++col) row.push_back(model.A(r, col));
        a.push_back(row);
    }
    j["A"] = a;
    j["b"] = std::vector<double>(model.b.data(), model.b.data() + model.b.size());
    j["lambda1"] = model.lambda1;
    j["lambda2"] = model.lambda2;
    j["epsilon"] = model.epsilon;
    j["trace_constraint"] = model.trace_constraint;
    const FitInfo& f = model.fit_info;
    j["fit_info"] = {{"iterations", f.iterations},       {"final_loss", f.final_loss},
                     {"converged", f.converged},         {"gradient_norm", f.gradient_norm},
                     {"min_eig_sym_A", f.min_eig_sym_A}, {"min_real_eig_A", f.min_real_eig_A},
                     {"small_sample", f.small_sample}};
    j["policy"] = {{"lambda", policy.lambda}, {"tau_star", policy.tau_star}, {"alpha", policy.alpha}};
    j["metadata"] = metadata;
    return j;
}

StoredModel model_from_json(const nlohmann::json& j) {
    try {
        const int version = at(j, "format_version").get<int>();
        if (version != kFormatVersion) {
            throw Error(ErrorKind::ParseError, fmt::format("unsupported model format_version {}", version));
        }
        const std::string kind = at(j, "kind").get<std::string>();
        if (kind != "geometric") throw Error(ErrorKind::ParseError, fmt::format("unsupported model kind '{}'", kind));

        StoredModel stored;
        CalibrationModel& m = stored.model;
        m.c = at(j, "c").get<std::size_t>();
        require(m.c >= 2, ErrorKind::ParseError, "model class count must be at least 2");
        const auto d = static_cast<Eigen::Index>(m.c - 1);
        const auto rows = at(j, "A").get<std::vector<std::vector<double>>>();
        const auto b = at(j, "b").get<std::vector<double>>();
        require(rows.size() == m.c - 1 && b.size() == m.c - 1, ErrorKind::ParseError,
                "model A and b do not match the class count");
        m.A.resize(d, d);
        m.b.resize(d);
        for (Eigen::Index r = 0; r < d; ++r) {
            require(rows[static_cast<std::size_t>(r)].size() == m.c - 1, ErrorKind::ParseError,
                    "model A is not square");
            for (Eigen::Index col = 0; col < d; ++col) {
                m.A(r, col) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)];
            }
            m.b[r] = b[static_cast<std::size_t>(r)];
        }
        m.lambda1 = at(j, "lambda1").get<double>();
        m.lambda2 = at(j, "lambda2").get<double>();
        m.epsilon = at(j, "epsilon").get<double>();
        m.trace_constraint = j.value("trace_constraint", false);
        if (j.contains("fit_info")) {
            const auto& f = j.at("fit_info");
            m.fit_info.iterations = f.value("iterations", 0);
            m.fit_info.final_loss = f.value("final_loss", 0.0);
            m.fit_info.converged = f.value("converged", false);
            m.fit_info.gradient_norm = f.value("gradient_norm", 0.0);
            m.fit_info.min_eig_sym_A = f.value("min_eig_sym_A", 0.0);
            m.fit_info.min_real_eig_A = f.value("min_real_eig_A", 0.0);
            m.fit_info.small_sample = f.value("small_sample", false);
        }
        const auto policy = at(j, "policy");
        stored.policy.lambda = at(policy, "lambda").get<double>();
        stored.policy.tau_star = at(policy, "tau_star").get<double>();
        stored.policy.alpha = at(policy, "alpha").get<double>();
        try {
            m.validate();
            stored.policy.validate();
        } catch (const Error& e) {
            throw Error(ErrorKind::ParseError, fmt::format("invalid model: {}", e.what()));
        }
        return stored;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, fmt::format("malformed model JSON: {}", e.what()));
    }
}

StoredModel read_model(const std::string& path) {
    const std::string text = read_text_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, fmt::format("{}: malformed JSON: {}", path, e.what()));
    }
    return model_from_json(j);
}

nlohmann::ordered_json baseline_to_json(const BaselineModel& model, const nlohmann::ordered_json& metadata) {
    nlohmann::ordered_json j;
    j["format_version"] = kFormatVersion;
    j["kind"] = std::string(to_string(model.kind));
    j["c"] = model.c;
    j["epsilon"] = model.epsilon;
    switch (model.kind) {
        case BaselineKind::Temperature:
            j["temperature"] = model.temperature;
            break;
        case BaselineKind::PlattOvR: {
            auto blocks = nlohmann::ordered_json::array();
            for (const auto& p : model.platt) blocks.push_back({{"a", p.a}, {"b", p.b}});
            j["platt"] = blocks;
            break;
        }
        case BaselineKind::Isotonic: {
            auto blocks = nlohmann::ordered_json::array();
            for (const auto& f : model.isotonic) blocks.push_back({{"thresholds", f.thresholds}, {"values", f.values}});
            j["isotonic"] = blocks;
            break;
        }
    }
    j["metadata"] = metadata;
    return j;
}

BaselineModel baseline_from_json(const nlohmann::json& j) {
    try {
        const int version = at(j, "format_version").get<int>();
        if (version != kFormatVersion) {
            throw Error(ErrorKind::ParseError, fmt::format("unsupported model format_version {}", version));
        }
        BaselineModel m;
        try {
            m.kind = parse_baseline_kind(at(j, "kind").get<std::string>());
        } catch (const Error& e) {
            throw Error(ErrorKind::ParseError, e.what());
        }
        m.c = at(j, "c").get<std::size_t>();
        require(m.c >= 2, ErrorKind::ParseError, "model class count must be at least 2");
        m.epsilon = at(j, "epsilon").get<double>();
        switch (m.kind) {
            case BaselineKind::Temperature:
                m.temperature = at(j, "temperature").get<double>();
                require(m.temperature > 0.0 && std::isfinite(m.temperature), ErrorKind::ParseError,
                        "temperature must be positive");
                break;
            case BaselineKind::PlattOvR:
                for (const auto& block : at(j, "platt")) {
                    m.platt.push_back({at(block, "a").get<double>(), at(block, "b").get<double>()});
                }
                require(m.platt.size() == m.c, ErrorKind::ParseError, "one Platt block per class is required");
                break;
            case BaselineKind::Isotonic:
                for (const auto& block : at(j, "isotonic")) {
                    StepFunction f{at(block, "thresholds").get<std::vector<double>>(),
                                   at(block, "values").get<std::vector<double>>()};
                    require(!f.values.empty() && f.thresholds.size() == f.values.size(), ErrorKind::ParseError,
                            "isotonic block needs matching nonempty thresholds and values");
                    m.isotonic.push_back(std::move(f));
                }
                require(m.isotonic.size() == m.c, ErrorKind::ParseError, "one isotonic block per class is required");
                break;
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, fmt::format("malformed model JSON: {}", e.what()));
    }
}

}  // namespace geocal

#pragma once

// File formats: probability CSVs (header p0,...,p{c-1}[,label], '#' comment
// lines), model JSON, and the metadata block stamped on every output.

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "geocal/baselines.hpp"
#include "geocal/calibration.hpp"
#include "geocal/dataset.hpp"
#include "geocal/reliability.hpp"

namespace geocal {

inline constexpr std::string_view kToolName = "geocal";
inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr int kFormatVersion = 1;

struct ProbabilityTable {
    std::size_t c = 0;
    std::vector<ProbVector> probs;
    std::vector<std::size_t> labels;  // empty when the file has no label column
    bool has_labels = false;
};

// Rows are renormalized by their sum (raw sums may deviate from 1 by up to 1%).
// Errors carry the 1-based line number.
ProbabilityTable parse_probability_csv(std::istream& in, bool require_labels);
ProbabilityTable read_probability_csv(const std::string& path, bool require_labels);

LabeledDataset to_dataset(const ProbabilityTable& table);
LabeledDataset read_dataset_csv(const std::string& path);

// "# key: value" lines followed by the header and rows.
void write_dataset_csv(std::ostream& out, const LabeledDataset& data, const nlohmann::ordered_json& metadata);

// 17 significant digits, enough to round-trip a double.
std::string format_double(double v);

// One "# key: value" line per top-level metadata field.
void write_comment_block(std::ostream& out, const nlohmann::ordered_json& metadata);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

struct StoredModel {
    CalibrationModel model;
    ReliabilityPolicy policy;
};

nlohmann::ordered_json model_to_json(const CalibrationModel& model, const ReliabilityPolicy& policy,
                                     const nlohmann::ordered_json& metadata);
StoredModel model_from_json(const nlohmann::json& j);
StoredModel read_model(const std::string& path);

// {format_version, kind, c, epsilon} plus one parameter block named after the
// kind: "temperature", "platt" ([{a, b}] per class) or "isotonic"
// ([{thresholds, values}] per class).
nlohmann::ordered_json baseline_to_json(const BaselineModel& model, const nlohmann::ordered_json& metadata);
BaselineModel baseline_from_json(const nlohmann::json& j);

}  // namespace geocal

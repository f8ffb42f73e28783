#include "geocal/dataset.hpp"

#include <string>

#include "geocal/error.hpp"

namespace geocal {

LabeledDataset::LabeledDataset(std::size_t c, std::vector<LabeledRow> rows) : c_(c) {
    require(c >= 2, ErrorKind::InvalidArgument, "class count must be at least 2");
    rows_.reserve(rows.size());
    for (auto& row : rows) add(std::move(row.probs), row.label);
}

void LabeledDataset::add(ProbVector probs, std::size_t label) {
    if (probs.size() != c_) {
        throw Error(ErrorKind::DimensionMismatch, "row has " + std::to_string(probs.size()) +
                                                      " probabilities, dataset has " + std::to_string(c_) +
                                                      " classes");
    }
    if (label >= c_) {
        throw Error(ErrorKind::IndexOutOfRange,
                    "label " + std::to_string(label) + " outside [0, " + std::to_string(c_) + ")");
    }
    rows_.push_back({std::move(probs), label});
}

std::vector<ProbVector> LabeledDataset::probabilities() const {
    std::vector<ProbVector> out;
    out.reserve(rows_.size());
    for (const auto& row : rows_) out.push_back(row.probs);
    return out;
}

std::vector<std::size_t> LabeledDataset::labels() const {
    std::vector<std::size_t> out;
    out.reserve(rows_.size());
    for (const auto& row : rows_) out.push_back(row.label);
    return out;
}

LabeledDataset LabeledDataset::subset(const std::vector<std::size_t>& indices) const {
    LabeledDataset out(c_);
    out.rows_.reserve(indices.size());
    for (std::size_t i : indices) {
        require(i < rows_.size(), ErrorKind::IndexOutOfRange, "subset index out of range");
        out.rows_.push_back(rows_[i]);
    }
    return out;
}

}  // namespace geocal

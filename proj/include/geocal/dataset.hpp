#pragma once

#include <cstddef>
#include <vector>

#include "geocal/simplex.hpp"

namespace geocal {

struct LabeledRow {
    ProbVector probs;
    std::size_t label = 0;
};

// Rows of (probability vector, zero-based label) over a fixed class count.
class LabeledDataset {
public:
    explicit LabeledDataset(std::size_t c = 2) : c_(c) {}
    LabeledDataset(std::size_t c, std::vector<LabeledRow> rows);

    // Throws DimensionMismatch on a length mismatch, IndexOutOfRange on a bad label.
    void add(ProbVector probs, std::size_t label);

    std::size_t classes() const noexcept { return c_; }
    std::size_t size() const noexcept { return rows_.size(); }
    bool empty() const noexcept { return rows_.empty(); }
    const LabeledRow& operator[](std::size_t i) const noexcept { return rows_[i]; }
    const std::vector<LabeledRow>& rows() const noexcept { return rows_; }

    std::vector<ProbVector> probabilities() const;
    std::vector<std::size_t> labels() const;

    LabeledDataset subset(const std::vector<std::size_t>& indices) const;

private:
    std::size_t c_;
    std::vector<LabeledRow> rows_;
};

}  // namespace geocal

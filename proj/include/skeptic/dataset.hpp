#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "skeptic/matrix.hpp"

namespace skeptic {

using Label = std::int32_t;

/// Features (one row per sample) with observed labels and, for audited
/// noisy datasets, the true labels.
struct LabeledDataset {
    Matrix features;
    std::vector<Label> labels;
    std::optional<std::vector<Label>> true_labels;
    std::size_t label_count = 0;

    std::size_t size() const { return labels.size(); }
    std::size_t dim() const { return features.cols; }
    std::span<const double> sample(std::size_t i) const { return features.row(i); }

    /// Throws on out-of-range labels or inconsistent lengths.
    void validate() const;

    /// Rows selected by `indices`, in that order.
    LabeledDataset subset(std::span<const std::size_t> indices) const;
};

}  // namespace skeptic

#include "skeptic/dataset.hpp"

#include <string>

#include "skeptic/error.hpp"

namespace skeptic {

void LabeledDataset::validate() const {
    if (label_count < 2) throw ConfigError("dataset needs at least 2 labels");
    if (features.rows != labels.size())
        throw ShapeError("feature rows (" + std::to_string(features.rows) + ") differ from label count (" +
                         std::to_string(labels.size()) + ")");
    const auto check = [&](const std::vector<Label>& values, const char* what) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (values[i] < 0 || static_cast<std::size_t>(values[i]) >= label_count)
                throw IndexError(std::string(what) + " " + std::to_string(values[i]) + " at index " +
                                 std::to_string(i) + " is outside [0, " + std::to_string(label_count) + ")");
        }
    };
    check(labels, "label");
    if (true_labels) {
        if (true_labels->size() != labels.size()) throw ShapeError("true_labels length differs from labels");
        check(*true_labels, "true label");
    }
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices) const {
    LabeledDataset out;
    out.label_count = label_count;
    out.features = Matrix(indices.size(), features.cols);
    out.labels.reserve(indices.size());
    if (true_labels) out.true_labels.emplace();
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::size_t src = indices[i];
        if (src >= size()) throw IndexError("subset index " + std::to_string(src) + " out of range");
        const auto row = features.row(src);
        std::copy(row.begin(), row.end(), out.features.row(i).begin());
        out.labels.push_back(labels[src]);
        if (true_labels) out.true_labels->push_back((*true_labels)[src]);
    }
    return out;
}

}  // namespace skeptic

#include "skeptic/metrics.hpp"

#include <algorithm>

#include "skeptic/error.hpp"

namespace skeptic {

double accuracy(std::span<const Label> predictions, std::span<const Label> labels) {
    if (predictions.size() != labels.size()) throw ShapeError("accuracy inputs differ in length");
    if (labels.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

RecoveryMetrics recovery_metrics(std::span<const Label> predicted, std::span<const Label> noisy,
                                 std::span<const Label> truth) {
    if (predicted.size() != noisy.size() || noisy.size() != truth.size())
        throw ShapeError("recovery metrics inputs differ in length");
    std::size_t disagree_noisy = 0, recovered_among_disagree = 0;
    std::size_t corrupted = 0, recovered_among_corrupted = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool correct = predicted[i] == truth[i];
        if (predicted[i] != noisy[i]) {
            ++disagree_noisy;
            recovered_among_disagree += correct ? 1 : 0;
        }
        if (truth[i] != noisy[i]) {
            ++corrupted;
            recovered_among_corrupted += correct ? 1 : 0;
        }
    }
    RecoveryMetrics out;
    if (disagree_noisy > 0)
        out.precision = static_cast<double>(recovered_among_disagree) / static_cast<double>(disagree_noisy);
    if (corrupted > 0) out.recall = static_cast<double>(recovered_among_corrupted) / static_cast<double>(corrupted);
    return out;
}

double partial_mean(std::span<const double> values) {
    if (values.size() < 3) throw ConfigError("partial mean needs at least 3 values");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    double total = 0.0;
    for (std::size_t i = 1; i + 1 < sorted.size(); ++i) total += sorted[i];
    return total / static_cast<double>(sorted.size() - 2);
}

std::optional<double> partial_mean(std::span<const std::optional<double>> values) {
    std::vector<double> defined;
    for (const auto& v : values) {
        if (v) defined.push_back(*v);
    }
    if (defined.empty()) return std::nullopt;
    if (defined.size() >= 3) return partial_mean(std::span<const double>(defined));
    double total = 0.0;
    for (double v : defined) total += v;
    return total / static_cast<double>(defined.size());
}

}  // namespace skeptic

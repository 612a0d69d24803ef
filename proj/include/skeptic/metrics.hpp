#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "skeptic/dataset.hpp"

namespace skeptic {

double accuracy(std::span<const Label> predictions, std::span<const Label> labels);

/// Precision and recall of label recovery. Each is nullopt when its
/// denominator is empty.
struct RecoveryMetrics {
    std::optional<double> precision;  // P(pred == true | pred != noisy)
    std::optional<double> recall;     // P(pred == true | true != noisy)
};

RecoveryMetrics recovery_metrics(std::span<const Label> predicted, std::span<const Label> noisy,
                                 std::span<const Label> truth);

struct EpochLog {
    std::size_t epoch = 0;
    double mean_loss = 0.0;
    double noisy_fit_accuracy = 0.0;
    double true_accuracy = 0.0;
    std::optional<double> test_accuracy;
};

struct ExperimentRecord {
    std::optional<double> test_error;
    double train_error_vs_true = 0.0;
    double noise_rate = 0.0;
    std::optional<double> recovery_precision;
    std::optional<double> recovery_recall;
    std::vector<EpochLog> per_epoch;
};

/// Mean after discarding one maximum and one minimum. Needs >= 3 values.
double partial_mean(std::span<const double> values);

/// Aggregates optional values: undefined entries are dropped, the partial
/// mean is taken when at least 3 remain, the plain mean otherwise, and
/// nullopt when nothing is defined.
std::optional<double> partial_mean(std::span<const std::optional<double>> values);

}  // namespace skeptic

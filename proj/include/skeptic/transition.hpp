#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "skeptic/dataset.hpp"
#include "skeptic/matrix.hpp"

namespace skeptic {

/// Column-stochastic |Y| x |Y| table indexed [noisy, clean]:
/// entry (n, c) approximates p(noisy label n | true label c).
class TransitionMatrix {
public:
    TransitionMatrix() = default;
    /// Takes ownership of `entries` and validates it.
    explicit TransitionMatrix(Matrix entries);

    static TransitionMatrix identity(std::size_t label_count);

    std::size_t label_count() const { return entries_.rows; }
    double operator()(std::size_t noisy, std::size_t clean) const { return entries_(noisy, clean); }
    const Matrix& entries() const { return entries_; }

    /// Largest |column sum - 1| over all columns.
    double max_column_deviation() const;

    /// Sum over clean labels of T[noisy, clean] * probs[clean].
    double mix(std::size_t noisy, std::span<const double> probs) const;

    /// column(clean) <- gamma * column(clean) + (1 - gamma) * e_noisy
    void blend_column(std::size_t clean, std::size_t noisy, double gamma);

    bool operator==(const TransitionMatrix&) const = default;

private:
    Matrix entries_;
};

struct EstimatorConfig {
    double gamma = 0.9999;
    double epsilon = 0.1;
    std::size_t warmup_epochs = 0;

    void validate() const;
};

TransitionMatrix init_identity(std::size_t label_count);

/// Confidence-gated estimator step. Returns true when the matrix changed
/// (the model's top probability exceeded 1 - epsilon).
bool maybe_update(TransitionMatrix& estimate, std::span<const double> probs, Label noisy_label,
                  const EstimatorConfig& config);

/// Count-based transition matrix from paired labels; columns of labels that
/// never occur fall back to the identity column.
TransitionMatrix empirical_transition(std::span<const Label> clean_labels, std::span<const Label> noisy_labels,
                                      std::size_t label_count);

/// Plain-text form: a `labels=<n>` header then one space-separated row per
/// noisy label.
void write_transition(const TransitionMatrix& matrix, const std::filesystem::path& path);
TransitionMatrix read_transition(const std::filesystem::path& path);

}  // namespace skeptic

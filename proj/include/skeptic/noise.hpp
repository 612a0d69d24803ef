#pragma once

#include <cstdint>
#include <string>

#include "skeptic/dataset.hpp"
#include "skeptic/model.hpp"

namespace skeptic {

enum class NoiseKind { symmetric, confusing };

NoiseKind parse_noise_kind(const std::string& name);
std::string to_string(NoiseKind kind);

struct NoiseSpec {
    NoiseKind kind = NoiseKind::symmetric;
    double rate = 0.0;
    std::uint64_t seed = 0;

    /// Rate must lie in [0, 0.5).
    void validate() const;
};

/// round-half-up of rate * n.
std::size_t flip_count(double rate, std::size_t n);

/// Flips exactly flip_count(rate, N) labels, chosen uniformly without
/// replacement, each to a uniform draw over the other |Y|-1 labels.
LabeledDataset symmetric_noise(const LabeledDataset& clean, const NoiseSpec& spec);

/// Wrong label per sample from the baseline's top-2 predictions: the second
/// label when the top one is correct, otherwise the (wrong) top label. A
/// uniform subset of flip_count(rate, N) samples receives its wrong label.
LabeledDataset confusing_noise(const LabeledDataset& clean, const NoiseSpec& spec, const NetworkState& baseline);

/// Top two labels of `probs`, ties resolved towards the lower index.
std::pair<Label, Label> top_two(std::span<const double> probs);

/// Fraction of samples whose label differs from its true label.
double noise_rate(const LabeledDataset& noisy);

}  // namespace skeptic

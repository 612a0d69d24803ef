#include "skeptic/noise.hpp"

#include <cmath>

#include "skeptic/error.hpp"
#include "skeptic/random.hpp"

namespace skeptic {

NoiseKind parse_noise_kind(const std::string& name) {
    if (name == "symmetric") return NoiseKind::symmetric;
    if (name == "confusing") return NoiseKind::confusing;
    throw ConfigError("unknown noise kind '" + name + "' (expected symmetric or confusing)");
}

std::string to_string(NoiseKind kind) { return kind == NoiseKind::symmetric ? "symmetric" : "confusing"; }

void NoiseSpec::validate() const {
    if (!(rate >= 0.0 && rate < 0.5))
        throw ConfigError("noise rate " + std::to_string(rate) + " outside [0, 0.5)");
}

std::size_t flip_count(double rate, std::size_t n) {
    return static_cast<std::size_t>(std::floor(rate * static_cast<double>(n) + 0.5));
}

namespace {

LabeledDataset with_truth(const LabeledDataset& clean) {
    clean.validate();
    LabeledDataset out = clean;
    out.true_labels = clean.labels;
    return out;
}

}  // namespace

LabeledDataset symmetric_noise(const LabeledDataset& clean, const NoiseSpec& spec) {
    spec.validate();
    if (spec.kind != NoiseKind::symmetric) throw ConfigError("symmetric_noise called with a non-symmetric spec");
    LabeledDataset out = with_truth(clean);
    Rng rng(spec.seed);
    const auto chosen = rng.sample_without_replacement(out.size(), flip_count(spec.rate, out.size()));
    const std::uint64_t others = out.label_count - 1;
    for (std::size_t i : chosen) {
        const auto truth = static_cast<std::uint64_t>(out.labels[i]);
        const std::uint64_t draw = rng.uniform_index(others);
        out.labels[i] = static_cast<Label>(draw < truth ? draw : draw + 1);
    }
    return out;
}

std::pair<Label, Label> top_two(std::span<const double> probs) {
    if (probs.size() < 2) throw ShapeError("top_two needs at least 2 probabilities");
    std::size_t first = 0;
    for (std::size_t i = 1; i < probs.size(); ++i) {
        if (probs[i] > probs[first]) first = i;
    }
    std::size_t second = first == 0 ? 1 : 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (i != first && probs[i] > probs[second]) second = i;
    }
    return {static_cast<Label>(first), static_cast<Label>(second)};
}

LabeledDataset confusing_noise(const LabeledDataset& clean, const NoiseSpec& spec, const NetworkState& baseline) {
    spec.validate();
    if (spec.kind != NoiseKind::confusing) throw ConfigError("confusing_noise called with a non-confusing spec");
    if (baseline.spec.label_count() != clean.label_count)
        throw ShapeError("baseline output dim " + std::to_string(baseline.spec.label_count()) +
                         " differs from label count " + std::to_string(clean.label_count));
    if (baseline.spec.input_dim() != clean.dim()) throw ShapeError("baseline input dim differs from feature dim");
    LabeledDataset out = with_truth(clean);

    std::vector<Label> wrong(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto [best, runner_up] = top_two(predict(baseline, out.sample(i)));
        wrong[i] = best == out.labels[i] ? runner_up : best;
    }
    Rng rng(spec.seed);
    for (std::size_t i : rng.sample_without_replacement(out.size(), flip_count(spec.rate, out.size())))
        out.labels[i] = wrong[i];
    return out;
}

double noise_rate(const LabeledDataset& noisy) {
    if (!noisy.true_labels) throw AuditError("noise rate needs true labels");
    const auto& truth = *noisy.true_labels;
    if (truth.size() != noisy.labels.size()) throw ShapeError("true_labels length differs from labels");
    if (truth.empty()) return 0.0;
    std::size_t flipped = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) flipped += noisy.labels[i] != truth[i] ? 1 : 0;
    return static_cast<double>(flipped) / static_cast<double>(truth.size());
}

}  // namespace skeptic

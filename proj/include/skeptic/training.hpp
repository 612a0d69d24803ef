#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "skeptic/dataset.hpp"
#include "skeptic/loss.hpp"
#include "skeptic/metrics.hpp"
#include "skeptic/model.hpp"
#include "skeptic/transition.hpp"

namespace skeptic {

struct TrainingOptions {
    /// Hidden layer sizes; input and output sizes come from the dataset.
    std::vector<std::size_t> hidden_layers;
    Activation activation = Activation::relu;
    OptimizerConfig optimizer;
    std::size_t epochs = 30;
    /// Seeds the weight init and the per-epoch shuffles.
    std::uint64_t seed = 1;
    /// When set, the transition matrix of a forward or skeptical loss starts
    /// at identity and follows the confidence-gated estimator.
    bool estimate_transition = false;
    EstimatorConfig estimator;
    /// Per-epoch accuracy logging over the training (and test) set.
    bool log_epochs = true;
};

struct TrainingResult {
    NetworkState model;
    /// Final matrix of a transition-based loss (estimated or fixed).
    std::optional<TransitionMatrix> transition;
    std::vector<EpochLog> epochs;
    std::size_t transition_updates = 0;
    std::size_t clamped_samples = 0;
};

/// Trains on `train.labels` (which may be noisy). For each minibatch the
/// mean per-sample gradient is applied first; with estimate_transition the
/// estimator then visits the batch samples using the updated model.
TrainingResult train_model(const LabeledDataset& train, const LabeledDataset* test, LossKind loss,
                           const TrainingOptions& options);

/// Argmax label per sample, ties towards the lower index.
std::vector<Label> predict_labels(const NetworkState& model, const LabeledDataset& data);

/// Test error, error against true labels, noise rate and recovery metrics.
/// Recovery fields stay undefined when `train` has no true labels.
ExperimentRecord evaluate_model(const NetworkState& model, const LabeledDataset& train, const LabeledDataset* test);

}  // namespace skeptic

#include "skeptic/training.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "skeptic/error.hpp"
#include "skeptic/noise.hpp"
#include "skeptic/random.hpp"

namespace skeptic {

namespace {

TransitionMatrix* transition_of(LossKind& loss) {
    if (auto* f = std::get_if<ForwardCorrection>(&loss)) return &f->transition;
    if (auto* s = std::get_if<SkepticalLoss>(&loss)) return &s->transition;
    return nullptr;
}

std::optional<TransitionMatrix> final_transition(const LossKind& loss) {
    if (const auto* f = std::get_if<ForwardCorrection>(&loss)) return f->transition;
    if (const auto* s = std::get_if<SkepticalLoss>(&loss)) return s->transition;
    if (const auto* b = std::get_if<BackwardCorrection>(&loss)) return b->transition;
    return std::nullopt;
}

}  // namespace

std::vector<Label> predict_labels(const NetworkState& model, const LabeledDataset& data) {
    std::vector<Label> out(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const std::vector<double> probs = predict(model, data.sample(i));
        out[i] = static_cast<Label>(std::max_element(probs.begin(), probs.end()) - probs.begin());
    }
    return out;
}

TrainingResult train_model(const LabeledDataset& train, const LabeledDataset* test, LossKind loss,
                           const TrainingOptions& options) {
    train.validate();
    if (train.size() == 0) throw ConfigError("training set is empty");
    options.optimizer.validate();
    options.estimator.validate();
    if (const auto* s = std::get_if<SkepticalLoss>(&loss)) s->validate();

    NetworkSpec spec;
    spec.layer_sizes.push_back(train.dim());
    spec.layer_sizes.insert(spec.layer_sizes.end(), options.hidden_layers.begin(), options.hidden_layers.end());
    spec.layer_sizes.push_back(train.label_count);
    spec.activation = options.activation;
    spec.seed = options.seed;

    TransitionMatrix* transition = transition_of(loss);
    if (options.estimate_transition) {
        if (transition == nullptr) throw ConfigError("transition estimation needs a forward or skeptical loss");
        *transition = init_identity(train.label_count);
    }
    if (transition != nullptr && transition->label_count() != train.label_count)
        throw ShapeError("transition matrix size differs from the label count");

    TrainingResult result;
    result.model = init_network(spec);
    NetworkState& model = result.model;
    const GradientSpace space = gradient_space(loss);
    Rng shuffle(options.seed ^ 0x9e3779b97f4a7c15ULL);
    const std::size_t batch_size = options.optimizer.batch_size;

    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        const std::vector<std::size_t> order = shuffle.permutation(train.size());
        double loss_total = 0.0;
        for (std::size_t start = 0, batch = 0; start < order.size(); start += batch_size, ++batch) {
            const std::size_t stop = std::min(order.size(), start + batch_size);
            Parameters gradient = Parameters::zeros_like(model.params);
            for (std::size_t pos = start; pos < stop; ++pos) {
                const std::size_t i = order[pos];
                const ForwardResult pass = forward(model, train.sample(i));
                const LossOutput out = evaluate_loss(loss, pass.logits, pass.probs, train.labels[i]);
                if (!std::isfinite(out.value))
                    throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                       std::to_string(batch) + ", sample " + std::to_string(i));
                result.clamped_samples += out.clamped ? 1 : 0;
                loss_total += out.value;
                if (space == GradientSpace::logits)
                    accumulate_gradient(model, pass, out.gradient, gradient);
                else
                    accumulate_gradient(model, pass, softmax_backward(pass.probs, out.gradient), gradient);
            }
            gradient *= 1.0 / static_cast<double>(stop - start);
            try {
                apply_update(model, gradient, options.optimizer, epoch);
            } catch (const NumericError& e) {
                throw NumericError(std::string(e.what()) + " (epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(batch) + ")");
            }

            if (options.estimate_transition && epoch >= options.estimator.warmup_epochs) {
                for (std::size_t pos = start; pos < stop; ++pos) {
                    const std::size_t i = order[pos];
                    if (maybe_update(*transition, predict(model, train.sample(i)), train.labels[i], options.estimator))
                        ++result.transition_updates;
                }
            }
        }

        if (options.log_epochs) {
            EpochLog log;
            log.epoch = epoch;
            log.mean_loss = loss_total / static_cast<double>(train.size());
            const std::vector<Label> predicted = predict_labels(model, train);
            log.noisy_fit_accuracy = accuracy(predicted, train.labels);
            log.true_accuracy = accuracy(predicted, train.true_labels ? *train.true_labels : train.labels);
            if (test != nullptr && test->size() > 0)
                log.test_accuracy = accuracy(predict_labels(model, *test), test->labels);
            result.epochs.push_back(log);
        }
    }
    result.transition = final_transition(loss);
    return result;
}

ExperimentRecord evaluate_model(const NetworkState& model, const LabeledDataset& train, const LabeledDataset* test) {
    ExperimentRecord record;
    if (test != nullptr && test->size() > 0)
        record.test_error = 1.0 - accuracy(predict_labels(model, *test), test->labels);
    const std::vector<Label> predicted = predict_labels(model, train);
    if (train.true_labels) {
        record.train_error_vs_true = 1.0 - accuracy(predicted, *train.true_labels);
        record.noise_rate = noise_rate(train);
        const RecoveryMetrics recovery = recovery_metrics(predicted, train.labels, *train.true_labels);
        record.recovery_precision = recovery.precision;
        record.recovery_recall = recovery.recall;
    } else {
        record.train_error_vs_true = 1.0 - accuracy(predicted, train.labels);
        record.noise_rate = 0.0;
    }
    return record;
}

}  // namespace skeptic

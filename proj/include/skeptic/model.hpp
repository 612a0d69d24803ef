#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "skeptic/matrix.hpp"

namespace skeptic {

enum class Activation { relu, tanh };

Activation parse_activation(const std::string& name);
std::string to_string(Activation activation);

/// Shape of a fully connected softmax classifier. The last layer size is the
/// number of labels.
struct NetworkSpec {
    std::vector<std::size_t> layer_sizes;
    Activation activation = Activation::relu;
    std::uint64_t seed = 0;

    std::size_t input_dim() const { return layer_sizes.front(); }
    std::size_t label_count() const { return layer_sizes.back(); }
    void validate() const;

    bool operator==(const NetworkSpec&) const = default;
};

/// Weights (out x in) and bias of one affine layer.
struct LayerParams {
    Matrix weights;
    std::vector<double> biases;

    bool operator==(const LayerParams&) const = default;
};

/// Parameter-shaped container. Used for parameters, gradients and optimizer
/// accumulators alike.
struct Parameters {
    std::vector<LayerParams> layers;

    static Parameters zeros_like(const Parameters& shape);

    std::size_t size() const;
    bool same_shape(const Parameters& other) const;
    bool all_finite() const;

    /// Concatenation of every layer's weights followed by its biases.
    std::vector<double> flatten() const;
    void assign_flat(std::span<const double> values);

    Parameters& operator+=(const Parameters& other);
    Parameters& operator*=(double scale);

    bool operator==(const Parameters&) const = default;
};

struct NetworkState {
    NetworkSpec spec;
    Parameters params;
    Parameters first_moment;   // SGD velocity or Adam m
    Parameters second_moment;  // Adam v; zero for SGD
    std::uint64_t step_count = 0;

    bool operator==(const NetworkState&) const = default;
};

enum class OptimizerKind { sgd_momentum, adam };

OptimizerKind parse_optimizer(const std::string& name);
std::string to_string(OptimizerKind kind);

struct LrStep {
    std::size_t epoch = 0;
    double multiplier = 1.0;

    bool operator==(const LrStep&) const = default;
};

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double learning_rate = 1e-3;
    double momentum = 0.9;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    double l2_scale = 0.0;
    std::vector<LrStep> lr_schedule;
    std::size_t batch_size = 128;

    void validate() const;
    /// Base rate times every multiplier whose epoch threshold is <= `epoch`.
    double learning_rate_at(std::size_t epoch) const;
};

/// Probabilities below this floor are clamped before any logarithm.
inline constexpr double kProbabilityFloor = 1e-12;

/// Logits and softmax output of one forward pass, plus the per-layer
/// inputs and pre-activations that backprop needs.
struct ForwardResult {
    std::vector<double> logits;
    std::vector<double> probs;
    std::vector<std::vector<double>> layer_inputs;
    std::vector<std::vector<double>> pre_activations;
};

NetworkState init_network(const NetworkSpec& spec);

std::size_t parameter_count(const NetworkSpec& spec);

std::vector<double> softmax(std::span<const double> logits);

ForwardResult forward(const NetworkState& state, std::span<const double> features);
std::vector<double> predict(const NetworkState& state, std::span<const double> features);

/// Gradient of a scalar loss given its derivative with respect to the
/// softmax output, chained through softmax and every layer.
Parameters backprop_per_sample(const NetworkState& state, std::span<const double> features,
                               std::span<const double> dloss_dprobs);

/// Same as backprop_per_sample for a loss expressed on the final logits.
Parameters backprop_from_logits(const NetworkState& state, std::span<const double> features,
                                std::span<const double> dloss_dlogits);

/// Chains a probability-space gradient through softmax: p * (g - <g, p>).
std::vector<double> softmax_backward(std::span<const double> probs, std::span<const double> dloss_dprobs);

/// Adds the parameter gradient for `dloss_dlogits` at a recorded forward
/// pass into `accumulator`.
void accumulate_gradient(const NetworkState& state, const ForwardResult& pass, std::span<const double> dloss_dlogits,
                         Parameters& accumulator);

/// One optimizer step. Throws NumericError if any parameter becomes non-finite.
void apply_update(NetworkState& state, const Parameters& mean_gradient, const OptimizerConfig& config,
                  std::size_t epoch);

}  // namespace skeptic

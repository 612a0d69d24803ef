#include "skeptic/model.hpp"

#include <algorithm>
#include <cmath>

#include "skeptic/error.hpp"
#include "skeptic/random.hpp"

namespace skeptic {

Activation parse_activation(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    throw ConfigError("unknown activation '" + name + "' (expected relu or tanh)");
}

std::string to_string(Activation activation) {
    return activation == Activation::relu ? "relu" : "tanh";
}

OptimizerKind parse_optimizer(const std::string& name) {
    if (name == "sgd" || name == "sgd_momentum") return OptimizerKind::sgd_momentum;
    if (name == "adam") return OptimizerKind::adam;
    throw ConfigError("unknown optimizer '" + name + "' (expected sgd_momentum or adam)");
}

std::string to_string(OptimizerKind kind) {
    return kind == OptimizerKind::adam ? "adam" : "sgd_momentum";
}

void NetworkSpec::validate() const {
    if (layer_sizes.size() < 2) throw ConfigError("network needs at least an input and an output layer");
    for (std::size_t size : layer_sizes) {
        if (size == 0) throw ConfigError("network layer sizes must be positive");
    }
    if (layer_sizes.back() < 2) throw ConfigError("network output layer needs at least 2 labels");
}

void OptimizerConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw ConfigError("learning_rate must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0,1)");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) throw ConfigError("adam_beta1 must lie in [0,1)");
    if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) throw ConfigError("adam_beta2 must lie in [0,1)");
    if (!(adam_epsilon > 0.0)) throw ConfigError("adam_epsilon must be positive");
    if (!(l2_scale >= 0.0)) throw ConfigError("l2_scale must be non-negative");
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
    for (std::size_t i = 0; i < lr_schedule.size(); ++i) {
        if (!(lr_schedule[i].multiplier > 0.0)) throw ConfigError("lr_schedule multipliers must be positive");
        if (i > 0 && lr_schedule[i].epoch <= lr_schedule[i - 1].epoch)
            throw ConfigError("lr_schedule epochs must be strictly increasing");
    }
}

double OptimizerConfig::learning_rate_at(std::size_t epoch) const {
    double rate = learning_rate;
    for (const LrStep& step : lr_schedule) {
        if (step.epoch <= epoch) rate *= step.multiplier;
    }
    return rate;
}

Parameters Parameters::zeros_like(const Parameters& shape) {
    Parameters out;
    out.layers.reserve(shape.layers.size());
    for (const LayerParams& layer : shape.layers) {
        out.layers.push_back({Matrix(layer.weights.rows, layer.weights.cols), std::vector<double>(layer.biases.size())});
    }
    return out;
}

std::size_t Parameters::size() const {
    std::size_t total = 0;
    for (const LayerParams& layer : layers) total += layer.weights.data.size() + layer.biases.size();
    return total;
}

bool Parameters::same_shape(const Parameters& other) const {
    if (layers.size() != other.layers.size()) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].weights.rows != other.layers[i].weights.rows ||
            layers[i].weights.cols != other.layers[i].weights.cols ||
            layers[i].biases.size() != other.layers[i].biases.size())
            return false;
    }
    return true;
}

bool Parameters::all_finite() const {
    const auto finite = [](double v) { return std::isfinite(v); };
    return std::all_of(layers.begin(), layers.end(), [&](const LayerParams& layer) {
        return std::all_of(layer.weights.data.begin(), layer.weights.data.end(), finite) &&
               std::all_of(layer.biases.begin(), layer.biases.end(), finite);
    });
}

std::vector<double> Parameters::flatten() const {
    std::vector<double> out;
    out.reserve(size());
    for (const LayerParams& layer : layers) {
        out.insert(out.end(), layer.weights.data.begin(), layer.weights.data.end());
        out.insert(out.end(), layer.biases.begin(), layer.biases.end());
    }
    return out;
}

void Parameters::assign_flat(std::span<const double> values) {
    if (values.size() != size()) throw ShapeError("flat parameter vector has the wrong length");
    std::size_t pos = 0;
    for (LayerParams& layer : layers) {
        std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(pos), layer.weights.data.size(), layer.weights.data.begin());
        pos += layer.weights.data.size();
        std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(pos), layer.biases.size(), layer.biases.begin());
        pos += layer.biases.size();
    }
}

Parameters& Parameters::operator+=(const Parameters& other) {
    if (!same_shape(other)) throw ShapeError("parameter shapes differ");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        auto& w = layers[l].weights.data;
        const auto& ow = other.layers[l].weights.data;
        for (std::size_t i = 0; i < w.size(); ++i) w[i] += ow[i];
        auto& b = layers[l].biases;
        const auto& ob = other.layers[l].biases;
        for (std::size_t i = 0; i < b.size(); ++i) b[i] += ob[i];
    }
    return *this;
}

Parameters& Parameters::operator*=(double scale) {
    for (LayerParams& layer : layers) {
        for (double& v : layer.weights.data) v *= scale;
        for (double& v : layer.biases) v *= scale;
    }
    return *this;
}

std::size_t parameter_count(const NetworkSpec& spec) {
    spec.validate();
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l)
        total += spec.layer_sizes[l] * spec.layer_sizes[l + 1] + spec.layer_sizes[l + 1];
    return total;
}

NetworkState init_network(const NetworkSpec& spec) {
    spec.validate();
    NetworkState state;
    state.spec = spec;
    Rng rng(spec.seed);
    // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
    for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
        const std::size_t fan_in = spec.layer_sizes[l];
        const std::size_t fan_out = spec.layer_sizes[l + 1];
        const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
        LayerParams layer{Matrix(fan_out, fan_in), std::vector<double>(fan_out)};
        for (double& w : layer.weights.data) w = rng.uniform(-scale, scale);
        for (double& b : layer.biases) b = rng.uniform(-scale, scale);
        state.params.layers.push_back(std::move(layer));
    }
    state.first_moment = Parameters::zeros_like(state.params);
    state.second_moment = Parameters::zeros_like(state.params);
    state.step_count = 0;
    return state;
}

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> out(logits.size());
    if (logits.empty()) return out;
    const double top = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - top);
        total += out[i];
    }
    for (double& p : out) p /= total;
    return out;
}

namespace {

double activate(Activation activation, double z) {
    return activation == Activation::relu ? std::max(0.0, z) : std::tanh(z);
}

// Derivative expressed through the activation output.
double activate_derivative(Activation activation, double z, double a) {
    return activation == Activation::relu ? (z > 0.0 ? 1.0 : 0.0) : 1.0 - a * a;
}

}  // namespace

ForwardResult forward(const NetworkState& state, std::span<const double> features) {
    if (features.size() != state.spec.input_dim())
        throw ShapeError("feature length " + std::to_string(features.size()) + " does not match input dim " +
                         std::to_string(state.spec.input_dim()));
    ForwardResult pass;
    const std::size_t layer_count = state.params.layers.size();
    std::vector<double> current(features.begin(), features.end());
    for (std::size_t l = 0; l < layer_count; ++l) {
        const LayerParams& layer = state.params.layers[l];
        std::vector<double> z(layer.biases);
        for (std::size_t r = 0; r < layer.weights.rows; ++r) {
            const auto w = layer.weights.row(r);
            double acc = 0.0;
            for (std::size_t c = 0; c < w.size(); ++c) acc += w[c] * current[c];
            z[r] += acc;
        }
        pass.layer_inputs.push_back(current);
        if (l + 1 < layer_count) {
            current.resize(z.size());
            for (std::size_t i = 0; i < z.size(); ++i) current[i] = activate(state.spec.activation, z[i]);
        }
        pass.pre_activations.push_back(std::move(z));
    }
    pass.logits = pass.pre_activations.back();
    pass.probs = softmax(pass.logits);
    return pass;
}

std::vector<double> predict(const NetworkState& state, std::span<const double> features) {
    return forward(state, features).probs;
}

std::vector<double> softmax_backward(std::span<const double> probs, std::span<const double> dloss_dprobs) {
    if (probs.size() != dloss_dprobs.size()) throw ShapeError("softmax_backward inputs differ in length");
    double inner = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) inner += dloss_dprobs[i] * probs[i];
    std::vector<double> dlogits(probs.size());
    for (std::size_t j = 0; j < probs.size(); ++j) dlogits[j] = probs[j] * (dloss_dprobs[j] - inner);
    return dlogits;
}

void accumulate_gradient(const NetworkState& state, const ForwardResult& pass, std::span<const double> dloss_dlogits,
                         Parameters& accumulator) {
    if (dloss_dlogits.size() != state.spec.label_count()) throw ShapeError("loss gradient length must equal |Y|");
    for (double g : dloss_dlogits) {
        if (!std::isfinite(g)) throw NumericError("non-finite loss gradient passed to backprop");
    }
    if (!accumulator.same_shape(state.params)) throw ShapeError("gradient accumulator shape does not match the network");
    std::vector<double> delta(dloss_dlogits.begin(), dloss_dlogits.end());
    for (std::size_t l = state.params.layers.size(); l-- > 0;) {
        const LayerParams& layer = state.params.layers[l];
        LayerParams& out = accumulator.layers[l];
        const std::vector<double>& input = pass.layer_inputs[l];
        for (std::size_t r = 0; r < layer.weights.rows; ++r) {
            auto gw = out.weights.row(r);
            for (std::size_t c = 0; c < gw.size(); ++c) gw[c] += delta[r] * input[c];
            out.biases[r] += delta[r];
        }
        if (l == 0) break;
        std::vector<double> back(layer.weights.cols, 0.0);
        for (std::size_t r = 0; r < layer.weights.rows; ++r) {
            const auto w = layer.weights.row(r);
            for (std::size_t c = 0; c < w.size(); ++c) back[c] += w[c] * delta[r];
        }
        const std::vector<double>& z = pass.pre_activations[l - 1];
        for (std::size_t c = 0; c < back.size(); ++c)
            back[c] *= activate_derivative(state.spec.activation, z[c], input[c]);
        delta = std::move(back);
    }
}

Parameters backprop_from_logits(const NetworkState& state, std::span<const double> features,
                                std::span<const double> dloss_dlogits) {
    Parameters grad = Parameters::zeros_like(state.params);
    accumulate_gradient(state, forward(state, features), dloss_dlogits, grad);
    return grad;
}

Parameters backprop_per_sample(const NetworkState& state, std::span<const double> features,
                               std::span<const double> dloss_dprobs) {
    if (dloss_dprobs.size() != state.spec.label_count()) throw ShapeError("loss gradient length must equal |Y|");
    for (double g : dloss_dprobs) {
        if (!std::isfinite(g)) throw NumericError("non-finite loss gradient passed to backprop");
    }
    const ForwardResult pass = forward(state, features);
    Parameters grad = Parameters::zeros_like(state.params);
    accumulate_gradient(state, pass, softmax_backward(pass.probs, dloss_dprobs), grad);
    return grad;
}

void apply_update(NetworkState& state, const Parameters& mean_gradient, const OptimizerConfig& config,
                  std::size_t epoch) {
    if (!state.params.same_shape(mean_gradient)) throw ShapeError("gradient shape does not match the network");
    const double lr = config.learning_rate_at(epoch);
    state.step_count += 1;
    const double step = static_cast<double>(state.step_count);
    const double bias1 = 1.0 - std::pow(config.adam_beta1, step);
    const double bias2 = 1.0 - std::pow(config.adam_beta2, step);

    for (std::size_t l = 0; l < state.params.layers.size(); ++l) {
        LayerParams& param = state.params.layers[l];
        LayerParams& m = state.first_moment.layers[l];
        LayerParams& v = state.second_moment.layers[l];
        const LayerParams& g = mean_gradient.layers[l];

        // L2 acts on weights only; biases are not decayed.
        auto update = [&](std::vector<double>& w, std::vector<double>& mw, std::vector<double>& vw,
                          const std::vector<double>& gw, double l2) {
            for (std::size_t i = 0; i < w.size(); ++i) {
                const double grad = gw[i] + l2 * w[i];
                if (config.kind == OptimizerKind::sgd_momentum) {
                    mw[i] = config.momentum * mw[i] + grad;
                    w[i] -= lr * mw[i];
                } else {
                    mw[i] = config.adam_beta1 * mw[i] + (1.0 - config.adam_beta1) * grad;
                    vw[i] = config.adam_beta2 * vw[i] + (1.0 - config.adam_beta2) * grad * grad;
                    const double m_hat = mw[i] / bias1;
                    const double v_hat = vw[i] / bias2;
                    w[i] -= lr * m_hat / (std::sqrt(v_hat) + config.adam_epsilon);
                }
            }
        };
        update(param.weights.data, m.weights.data, v.weights.data, g.weights.data, config.l2_scale);
        update(param.biases, m.biases, v.biases, g.biases, 0.0);
    }
    if (!state.params.all_finite())
        throw NumericError("non-finite parameters after optimizer step " + std::to_string(state.step_count));
}

}  // namespace skeptic

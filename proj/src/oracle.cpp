#include "skeptic/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "skeptic/error.hpp"
#include "skeptic/loss.hpp"
#include "skeptic/transition.hpp"

namespace skeptic::oracle {

namespace {

constexpr double kMassTolerance = 1e-12;

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

void add_scaled(std::vector<double>& acc, const std::vector<double>& v, double scale) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += scale * v[i];
}

void check_scorer(const NetworkState& scorer, std::size_t feature_count, std::size_t label_count) {
    const auto& sizes = scorer.spec.layer_sizes;
    if (sizes.size() != 2 || sizes[0] != feature_count || sizes[1] != label_count)
        throw ShapeError("scorer must be a single softmax layer of shape |X| -> |Y|");
}

// Normalized vector with uniform(0.05, 1) entries; with `allow_zero`, each
// entry is zeroed with probability 1/4 while keeping one entry positive.
std::vector<double> random_distribution(Rng& rng, std::size_t size, bool allow_zero) {
    std::vector<double> v(size);
    for (double& e : v) e = rng.uniform(0.05, 1.0);
    if (allow_zero) {
        const std::size_t keep = static_cast<std::size_t>(rng.uniform_index(size));
        for (std::size_t i = 0; i < size; ++i) {
            if (i != keep && rng.uniform_index(4) == 0) v[i] = 0.0;
        }
    }
    double total = 0.0;
    for (double e : v) total += e;
    for (double& e : v) e /= total;
    return v;
}

}  // namespace

double DiscreteJointModel::feature_mass(std::size_t x) const {
    double total = 0.0;
    for (double v : joint.row(x)) total += v;
    return total;
}

void DiscreteJointModel::validate() const {
    if (joint.rows == 0 || joint.cols == 0) throw ConfigError("joint model needs positive feature and label counts");
    double total = 0.0;
    for (double v : joint.data) {
        if (!(v >= 0.0)) throw DomainError("joint probabilities must be non-negative");
        total += v;
    }
    if (std::abs(total - 1.0) > kMassTolerance) throw DomainError("joint probabilities must sum to 1");
}

double PairedCorruption::coupling_at(std::size_t x, std::size_t y, std::size_t noisy_y) const {
    const std::size_t n = label_count();
    return coupling[(x * n + y) * n + noisy_y];
}

PairedCorruption PairedCorruption::from_coupling(std::size_t feature_count, std::size_t label_count,
                                                 std::vector<double> coupling) {
    if (coupling.size() != feature_count * label_count * label_count)
        throw ShapeError("coupling tensor must have |X| * |Y| * |Y| entries");
    PairedCorruption pair;
    pair.clean.joint = Matrix(feature_count, label_count);
    pair.noisy.joint = Matrix(feature_count, label_count);
    pair.coupling = std::move(coupling);
    for (std::size_t x = 0; x < feature_count; ++x)
        for (std::size_t y = 0; y < label_count; ++y)
            for (std::size_t t = 0; t < label_count; ++t) {
                const double mass = pair.coupling_at(x, y, t);
                pair.clean.joint(x, y) += mass;
                pair.noisy.joint(x, t) += mass;
            }
    pair.validate();
    return pair;
}

PairedCorruption PairedCorruption::from_kernel(const std::vector<double>& feature_marginal,
                                               const Matrix& clean_posterior, const std::vector<double>& kernel) {
    const std::size_t nx = feature_marginal.size();
    const std::size_t ny = clean_posterior.cols;
    if (clean_posterior.rows != nx || kernel.size() != nx * ny * ny)
        throw ShapeError("feature marginal, clean posterior and kernel shapes disagree");
    std::vector<double> coupling(nx * ny * ny);
    for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t y = 0; y < ny; ++y)
            for (std::size_t t = 0; t < ny; ++t) {
                const std::size_t i = (x * ny + y) * ny + t;
                coupling[i] = feature_marginal[x] * clean_posterior(x, y) * kernel[i];
            }
    return from_coupling(nx, ny, std::move(coupling));
}

void PairedCorruption::validate() const {
    clean.validate();
    noisy.validate();
    if (clean.joint.rows != noisy.joint.rows || clean.joint.cols != noisy.joint.cols)
        throw ShapeError("clean and noisy models differ in shape");
    const std::size_t nx = feature_count();
    const std::size_t ny = label_count();
    if (coupling.size() != nx * ny * ny) throw ShapeError("coupling tensor has the wrong size");
    for (double v : coupling) {
        if (!(v >= 0.0)) throw DomainError("coupling entries must be non-negative");
    }
    for (std::size_t x = 0; x < nx; ++x) {
        for (std::size_t y = 0; y < ny; ++y) {
            double over_noisy = 0.0;
            double over_clean = 0.0;
            for (std::size_t t = 0; t < ny; ++t) {
                over_noisy += coupling_at(x, y, t);
                over_clean += coupling_at(x, t, y);
            }
            if (std::abs(over_noisy - clean.joint(x, y)) > kMassTolerance ||
                std::abs(over_clean - noisy.joint(x, y)) > kMassTolerance)
                throw DomainError("coupling marginals do not match the clean and noisy models");
        }
        if (std::abs(clean.feature_mass(x) - noisy.feature_mass(x)) > kMassTolerance)
            throw DomainError("clean and noisy feature marginals differ at feature " + std::to_string(x));
    }
}

std::vector<double> label_posterior_given_feature(const DiscreteJointModel& model, std::size_t x) {
    if (x >= model.feature_count()) throw IndexError("feature index out of range");
    const double mass = model.feature_mass(x);
    if (!(mass > 0.0)) throw DomainError("feature " + std::to_string(x) + " has zero mass");
    std::vector<double> out(model.label_count());
    for (std::size_t y = 0; y < out.size(); ++y) out[y] = model.joint(x, y) / mass;
    return out;
}

ConditionalTable posterior_table(const PairedCorruption& pair) {
    const std::size_t nx = pair.feature_count();
    const std::size_t ny = pair.label_count();
    ConditionalTable table{nx, ny, std::vector<double>(nx * ny * ny, 0.0), std::vector<char>(nx * ny * ny, 0)};
    for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t t = 0; t < ny; ++t) {
            const double given = pair.noisy.joint(x, t);
            if (!(given > 0.0)) continue;
            for (std::size_t y = 0; y < ny; ++y) {
                table.values[table.index(x, y, t)] = pair.coupling_at(x, y, t) / given;
                table.defined[table.index(x, y, t)] = 1;
            }
        }
    return table;
}

ConditionalTable conditional_table(const PairedCorruption& pair) {
    const std::size_t nx = pair.feature_count();
    const std::size_t ny = pair.label_count();
    ConditionalTable table{nx, ny, std::vector<double>(nx * ny * ny, 0.0), std::vector<char>(nx * ny * ny, 0)};
    for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t y = 0; y < ny; ++y) {
            const double given = pair.clean.joint(x, y);
            if (!(given > 0.0)) continue;
            for (std::size_t t = 0; t < ny; ++t) {
                table.values[table.index(x, y, t)] = pair.coupling_at(x, y, t) / given;
                table.defined[table.index(x, y, t)] = 1;
            }
        }
    return table;
}

ConditionalTable posterior_from_conditional(const PairedCorruption& pair) {
    const std::size_t nx = pair.feature_count();
    const std::size_t ny = pair.label_count();
    const ConditionalTable cond = conditional_table(pair);
    ConditionalTable table{nx, ny, std::vector<double>(nx * ny * ny, 0.0), std::vector<char>(nx * ny * ny, 0)};
    for (std::size_t x = 0; x < nx; ++x) {
        if (!(pair.clean.feature_mass(x) > 0.0)) continue;
        const std::vector<double> prior = label_posterior_given_feature(pair.clean, x);
        for (std::size_t t = 0; t < ny; ++t) {
            double denominator = 0.0;
            for (std::size_t y = 0; y < ny; ++y) {
                if (cond.is_defined(x, y, t)) denominator += cond.at(x, y, t) * prior[y];
            }
            if (!(denominator > 0.0)) continue;
            for (std::size_t y = 0; y < ny; ++y) {
                const double numerator = cond.is_defined(x, y, t) ? cond.at(x, y, t) * prior[y] : 0.0;
                table.values[table.index(x, y, t)] = numerator / denominator;
                table.defined[table.index(x, y, t)] = 1;
            }
        }
    }
    return table;
}

std::vector<double> recompose_clean_posterior(const PairedCorruption& pair, std::size_t x) {
    const ConditionalTable post = posterior_table(pair);
    const std::vector<double> noisy_prior = label_posterior_given_feature(pair.noisy, x);
    std::vector<double> out(pair.label_count(), 0.0);
    for (std::size_t y = 0; y < out.size(); ++y)
        for (std::size_t t = 0; t < out.size(); ++t) {
            if (post.is_defined(x, y, t)) out[y] += post.at(x, y, t) * noisy_prior[t];
        }
    return out;
}

std::vector<double> one_hot(std::size_t size, std::size_t index) {
    std::vector<double> v(size, 0.0);
    v.at(index) = 1.0;
    return v;
}

std::vector<double> log_likelihood_gradient(const NetworkState& scorer, std::size_t x, std::size_t y) {
    const std::vector<double> features = one_hot(scorer.spec.input_dim(), x);
    const std::vector<double> probs = predict(scorer, features);
    // d log p_y / d p = e_y / p_y
    std::vector<double> dprobs(probs.size(), 0.0);
    dprobs.at(y) = 1.0 / probs[y];
    return backprop_per_sample(scorer, features, dprobs).flatten();
}

std::vector<double> expected_gradient_clean(const DiscreteJointModel& model, const NetworkState& scorer) {
    check_scorer(scorer, model.feature_count(), model.label_count());
    std::vector<double> total(scorer.params.size(), 0.0);
    for (std::size_t x = 0; x < model.feature_count(); ++x)
        for (std::size_t y = 0; y < model.label_count(); ++y) {
            const double mass = model.joint(x, y);
            if (mass > 0.0) add_scaled(total, log_likelihood_gradient(scorer, x, y), mass);
        }
    return total;
}

std::vector<double> posterior_corrected_sample(const PairedCorruption& pair, const ConditionalTable& post,
                                               const NetworkState& scorer, std::size_t x, std::size_t noisy_y) {
    std::vector<double> total(scorer.params.size(), 0.0);
    for (std::size_t y = 0; y < pair.label_count(); ++y) {
        if (!post.is_defined(x, y, noisy_y))
            throw OracleError("posterior undefined at (x=" + std::to_string(x) + ", y~=" + std::to_string(noisy_y) +
                              ")");
        const double weight = post.at(x, y, noisy_y);
        if (weight != 0.0) add_scaled(total, log_likelihood_gradient(scorer, x, y), weight);
    }
    return total;
}

std::vector<double> posterior_corrected_expectation(const PairedCorruption& pair, const NetworkState& scorer) {
    check_scorer(scorer, pair.feature_count(), pair.label_count());
    const ConditionalTable post = posterior_table(pair);
    std::vector<double> total(scorer.params.size(), 0.0);
    for (std::size_t x = 0; x < pair.feature_count(); ++x)
        for (std::size_t t = 0; t < pair.label_count(); ++t) {
            const double mass = pair.noisy.joint(x, t);
            if (mass > 0.0) add_scaled(total, posterior_corrected_sample(pair, post, scorer, x, t), mass);
        }
    return total;
}

std::vector<double> conditional_corrected_sample(const PairedCorruption& pair, const ConditionalTable& cond,
                                                 const NetworkState& scorer, std::size_t x, std::size_t noisy_y,
                                                 LabelPrior prior) {
    const std::size_t ny = pair.label_count();
    std::vector<double> weights(ny, 0.0);
    if (prior == LabelPrior::true_posterior) {
        const std::vector<double> clean = label_posterior_given_feature(pair.clean, x);
        for (std::size_t y = 0; y < ny; ++y) {
            // Undefined cond only occurs where the clean cell has zero mass.
            if (cond.is_defined(x, y, noisy_y)) weights[y] = cond.at(x, y, noisy_y) * clean[y];
        }
    } else {
        const std::vector<double> probs = predict(scorer, one_hot(scorer.spec.input_dim(), x));
        for (std::size_t y = 0; y < ny; ++y) {
            if (!cond.is_defined(x, y, noisy_y))
                throw OracleError("conditional undefined at (x=" + std::to_string(x) + ", y=" + std::to_string(y) +
                                  ") for model-prediction substitution");
            weights[y] = cond.at(x, y, noisy_y) * probs[y];
        }
    }
    double denominator = 0.0;
    for (double w : weights) denominator += w;
    if (!(denominator > 0.0))
        throw OracleError("zero denominator at (x=" + std::to_string(x) + ", y~=" + std::to_string(noisy_y) + ")");
    std::vector<double> total(scorer.params.size(), 0.0);
    for (std::size_t y = 0; y < ny; ++y) {
        if (weights[y] != 0.0) add_scaled(total, log_likelihood_gradient(scorer, x, y), weights[y] / denominator);
    }
    return total;
}

std::vector<double> conditional_corrected_expectation(const PairedCorruption& pair, const NetworkState& scorer) {
    check_scorer(scorer, pair.feature_count(), pair.label_count());
    const ConditionalTable cond = conditional_table(pair);
    std::vector<double> total(scorer.params.size(), 0.0);
    for (std::size_t x = 0; x < pair.feature_count(); ++x)
        for (std::size_t t = 0; t < pair.label_count(); ++t) {
            const double mass = pair.noisy.joint(x, t);
            if (mass > 0.0)
                add_scaled(total, conditional_corrected_sample(pair, cond, scorer, x, t, LabelPrior::true_posterior),
                           mass);
        }
    return total;
}

PairedCorruption random_pair(Rng& rng, std::size_t feature_count, std::size_t label_count, bool allow_zero_cells) {
    const std::vector<double> marginal = random_distribution(rng, feature_count, false);
    Matrix clean(feature_count, label_count);
    for (std::size_t x = 0; x < feature_count; ++x) {
        const std::vector<double> row = random_distribution(rng, label_count, allow_zero_cells);
        std::copy(row.begin(), row.end(), clean.row(x).begin());
    }
    std::vector<double> kernel;
    kernel.reserve(feature_count * label_count * label_count);
    for (std::size_t i = 0; i < feature_count * label_count; ++i) {
        const std::vector<double> row = random_distribution(rng, label_count, allow_zero_cells);
        kernel.insert(kernel.end(), row.begin(), row.end());
    }
    return PairedCorruption::from_kernel(marginal, clean, kernel);
}

NetworkState random_scorer(Rng& rng, std::size_t feature_count, std::size_t label_count, double scale) {
    NetworkState scorer = init_network(NetworkSpec{{feature_count, label_count}, Activation::relu, rng.next()});
    for (double& w : scorer.params.layers[0].weights.data) w = rng.uniform(-scale, scale);
    for (double& b : scorer.params.layers[0].biases) b = rng.uniform(-scale, scale);
    return scorer;
}

namespace {

// Row-per-noisy-label transition matrix built from cond[x, ., .].
TransitionMatrix feature_transition(const ConditionalTable& cond, std::size_t x) {
    const std::size_t ny = cond.label_count;
    Matrix m(ny, ny);
    for (std::size_t t = 0; t < ny; ++t)
        for (std::size_t y = 0; y < ny; ++y) m(t, y) = cond.at(x, y, t);
    return TransitionMatrix(std::move(m));
}

double forward_loss_value(const NetworkState& scorer, std::size_t x, std::size_t noisy_y, const TransitionMatrix& t) {
    const std::vector<double> probs = predict(scorer, one_hot(scorer.spec.input_dim(), x));
    return forward_corrected_loss(probs, static_cast<Label>(noisy_y), t).value;
}

}  // namespace

OracleReport run_oracle_suite(std::size_t trials, std::uint64_t seed) {
    OracleReport report;
    report.trials = trials;
    report.seed = seed;
    Rng rng(seed);
    for (std::size_t trial = 0; trial < trials; ++trial) {
        const auto nx = static_cast<std::size_t>(2 + rng.uniform_index(3));
        const auto ny = static_cast<std::size_t>(2 + rng.uniform_index(3));
        const PairedCorruption pair = random_pair(rng, nx, ny, trial % 2 == 1);
        const NetworkState scorer = random_scorer(rng, nx, ny, 1.5);

        report.max_identity_deviation =
            std::max(report.max_identity_deviation,
                     max_abs_diff(posterior_corrected_expectation(pair, scorer), expected_gradient_clean(pair.clean, scorer)));

        const ConditionalTable post = posterior_table(pair);
        const ConditionalTable cond = conditional_table(pair);
        const ConditionalTable bayes = posterior_from_conditional(pair);
        for (std::size_t x = 0; x < nx; ++x) {
            report.max_recomposition_deviation =
                std::max(report.max_recomposition_deviation,
                         max_abs_diff(recompose_clean_posterior(pair, x), label_posterior_given_feature(pair.clean, x)));
            for (std::size_t t = 0; t < ny; ++t) {
                if (!(pair.noisy.joint(x, t) > 0.0)) continue;
                for (std::size_t y = 0; y < ny; ++y) {
                    if (!bayes.is_defined(x, y, t)) throw OracleError("Bayes recomposition undefined on noisy support");
                    report.max_recomposition_deviation = std::max(
                        report.max_recomposition_deviation, std::abs(bayes.at(x, y, t) - post.at(x, y, t)));
                }
                report.max_chain_deviation = std::max(
                    report.max_chain_deviation,
                    max_abs_diff(conditional_corrected_sample(pair, cond, scorer, x, t, LabelPrior::true_posterior),
                                 posterior_corrected_sample(pair, post, scorer, x, t)));
            }
        }

        // Forward equivalence needs every clean cell populated.
        const PairedCorruption dense = random_pair(rng, nx, ny, false);
        const ConditionalTable dense_cond = conditional_table(dense);
        for (std::size_t x = 0; x < nx; ++x) {
            const TransitionMatrix t_x = feature_transition(dense_cond, x);
            const std::vector<double> features = one_hot(nx, x);
            const std::vector<double> probs = predict(scorer, features);
            for (std::size_t t = 0; t < ny; ++t) {
                const std::vector<double> substituted =
                    conditional_corrected_sample(dense, dense_cond, scorer, x, t, LabelPrior::model_predictions);
                // The forward loss is -log of the mixture, so its gradient is the negation.
                const LossOutput loss = forward_corrected_loss(probs, static_cast<Label>(t), t_x);
                std::vector<double> analytic = backprop_per_sample(scorer, features, loss.gradient).flatten();
                for (double& v : analytic) v = -v;
                report.max_forward_analytic_deviation =
                    std::max(report.max_forward_analytic_deviation, max_abs_diff(substituted, analytic));

                constexpr double step = 1e-5;
                NetworkState probe = scorer;
                std::vector<double> flat = scorer.params.flatten();
                std::vector<double> numeric(flat.size());
                for (std::size_t i = 0; i < flat.size(); ++i) {
                    const double saved = flat[i];
                    flat[i] = saved + step;
                    probe.params.assign_flat(flat);
                    const double up = forward_loss_value(probe, x, t, t_x);
                    flat[i] = saved - step;
                    probe.params.assign_flat(flat);
                    const double down = forward_loss_value(probe, x, t, t_x);
                    flat[i] = saved;
                    numeric[i] = -(up - down) / (2.0 * step);
                }
                report.max_forward_difference_deviation =
                    std::max(report.max_forward_difference_deviation, max_abs_diff(substituted, numeric));
            }
        }
    }
    return report;
}

void print_report(std::ostream& out, const OracleReport& report) {
    const auto line = [&](const char* name, double value, double tol, bool ok) {
        out << (ok ? "PASS " : "FAIL ") << name << " max_deviation=" << value << " tolerance=" << tol << '\n';
    };
    out << "oracle trials=" << report.trials << " seed=" << report.seed << '\n';
    line("posterior_identity", report.max_identity_deviation, report.tolerances.identity, report.identity_ok());
    line("conditional_chain", report.max_chain_deviation, report.tolerances.chain, report.chain_ok());
    line("recomposition", report.max_recomposition_deviation, report.tolerances.recomposition,
         report.recomposition_ok());
    line("forward_analytic", report.max_forward_analytic_deviation, report.tolerances.forward_analytic,
         report.max_forward_analytic_deviation < report.tolerances.forward_analytic);
    line("forward_finite_difference", report.max_forward_difference_deviation, report.tolerances.forward_difference,
         report.max_forward_difference_deviation < report.tolerances.forward_difference);
    out << (report.passed() ? "oracle: PASS" : "oracle: FAIL") << '\n';
}

}  // namespace skeptic::oracle

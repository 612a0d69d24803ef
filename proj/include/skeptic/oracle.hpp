#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "skeptic/matrix.hpp"
#include "skeptic/model.hpp"
#include "skeptic/random.hpp"

// Exhaustive checks of the distribution-correction identities on finite
// feature x label spaces. A "scorer" is a single softmax layer over one-hot
// encoded features, i.e. a NetworkState with layer sizes {|X|, |Y|}.

namespace skeptic::oracle {

/// Joint probability table p(x, y), rows indexed by feature.
struct DiscreteJointModel {
    Matrix joint;

    std::size_t feature_count() const { return joint.rows; }
    std::size_t label_count() const { return joint.cols; }
    double feature_mass(std::size_t x) const;
    void validate() const;
};

/// Clean and noisy models together with the three-way coupling
/// p(clean (x, y) and noisy (x, y~)), indexed [x][y][y~].
struct PairedCorruption {
    DiscreteJointModel clean;
    DiscreteJointModel noisy;
    std::vector<double> coupling;

    std::size_t feature_count() const { return clean.feature_count(); }
    std::size_t label_count() const { return clean.label_count(); }
    double coupling_at(std::size_t x, std::size_t y, std::size_t noisy_y) const;

    /// Builds both marginals from a coupling tensor.
    static PairedCorruption from_coupling(std::size_t feature_count, std::size_t label_count,
                                          std::vector<double> coupling);

    /// Feature marginal p(x), clean label posteriors p(y|x) and corruption
    /// kernels p(y~ | x, y) (indexed [x][y][y~]).
    static PairedCorruption from_kernel(const std::vector<double>& feature_marginal, const Matrix& clean_posterior,
                                        const std::vector<double>& kernel);

    /// Checks marginal consistency and the shared feature marginal.
    void validate() const;
};

/// Three-way table [x][y][y~] whose entries may be undefined (conditioning
/// on a zero-mass event).
struct ConditionalTable {
    std::size_t feature_count = 0;
    std::size_t label_count = 0;
    std::vector<double> values;
    std::vector<char> defined;

    std::size_t index(std::size_t x, std::size_t y, std::size_t noisy_y) const {
        return (x * label_count + y) * label_count + noisy_y;
    }
    double at(std::size_t x, std::size_t y, std::size_t noisy_y) const { return values[index(x, y, noisy_y)]; }
    bool is_defined(std::size_t x, std::size_t y, std::size_t noisy_y) const {
        return defined[index(x, y, noisy_y)] != 0;
    }
};

std::vector<double> label_posterior_given_feature(const DiscreteJointModel& model, std::size_t x);

/// post[x, y, y~] = p(clean (x, y) | noisy (x, y~)).
ConditionalTable posterior_table(const PairedCorruption& pair);

/// cond[x, y, y~] = p(noisy (x, y~) | clean (x, y)).
ConditionalTable conditional_table(const PairedCorruption& pair);

/// Bayes recomposition of the posterior from cond and the clean label
/// posterior.
ConditionalTable posterior_from_conditional(const PairedCorruption& pair);

/// sum_{y~} post[x, y, y~] p(y~ | x) under the noisy model; equals the clean
/// label posterior of x.
std::vector<double> recompose_clean_posterior(const PairedCorruption& pair, std::size_t x);

std::vector<double> one_hot(std::size_t size, std::size_t index);

/// Flattened gradient of log p(y | x; theta) for the scorer.
std::vector<double> log_likelihood_gradient(const NetworkState& scorer, std::size_t x, std::size_t y);

/// sum_{x,y} p(x, y) grad log p(y | x; theta).
std::vector<double> expected_gradient_clean(const DiscreteJointModel& model, const NetworkState& scorer);

/// sum_y post[x, y, y~] grad log p(y | x; theta) for one noisy sample.
std::vector<double> posterior_corrected_sample(const PairedCorruption& pair, const ConditionalTable& post,
                                               const NetworkState& scorer, std::size_t x, std::size_t noisy_y);

/// Noisy-distribution expectation of posterior_corrected_sample.
std::vector<double> posterior_corrected_expectation(const PairedCorruption& pair, const NetworkState& scorer);

/// Source of the label weights in the conditional ratio form.
enum class LabelPrior {
    true_posterior,     // p(y | x) of the clean model
    model_predictions,  // the scorer's own p(y | x; theta)
};

/// Ratio form sum_y cond w_y grad log p(y|x) / sum_y cond w_y for one noisy
/// sample, where w is selected by `prior`.
std::vector<double> conditional_corrected_sample(const PairedCorruption& pair, const ConditionalTable& cond,
                                                 const NetworkState& scorer, std::size_t x, std::size_t noisy_y,
                                                 LabelPrior prior);

std::vector<double> conditional_corrected_expectation(const PairedCorruption& pair, const NetworkState& scorer);

/// Random instance: feature marginal first, then per-feature clean label
/// distributions, then per-(x, y) corruption kernels. With
/// `allow_zero_cells`, some label and kernel entries are set to zero.
PairedCorruption random_pair(Rng& rng, std::size_t feature_count, std::size_t label_count, bool allow_zero_cells);

/// Scorer with uniform(-scale, scale) weights and biases.
NetworkState random_scorer(Rng& rng, std::size_t feature_count, std::size_t label_count, double scale);

struct OracleTolerances {
    double identity = 1e-10;            // posterior form vs clean expectation
    double chain = 1e-12;               // conditional vs posterior, per sample
    double recomposition = 1e-12;       // clean posterior and Bayes recomposition
    double forward_analytic = 1e-10;    // self-substituted form vs backprop of forward loss
    double forward_difference = 1e-6;   // self-substituted form vs finite differences
};

struct OracleReport {
    std::size_t trials = 0;
    std::uint64_t seed = 0;
    OracleTolerances tolerances;
    double max_identity_deviation = 0.0;
    double max_chain_deviation = 0.0;
    double max_recomposition_deviation = 0.0;
    double max_forward_analytic_deviation = 0.0;
    double max_forward_difference_deviation = 0.0;

    bool identity_ok() const { return max_identity_deviation < tolerances.identity; }
    bool chain_ok() const { return max_chain_deviation < tolerances.chain; }
    bool recomposition_ok() const { return max_recomposition_deviation < tolerances.recomposition; }
    bool forward_ok() const {
        return max_forward_analytic_deviation < tolerances.forward_analytic &&
               max_forward_difference_deviation < tolerances.forward_difference;
    }
    bool passed() const { return identity_ok() && chain_ok() && recomposition_ok() && forward_ok(); }
};

/// Randomized suite over instances with |X|, |Y| in [2, 4].
OracleReport run_oracle_suite(std::size_t trials, std::uint64_t seed);

void print_report(std::ostream& out, const OracleReport& report);

}  // namespace skeptic::oracle

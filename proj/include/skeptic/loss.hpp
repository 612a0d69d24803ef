#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "skeptic/dataset.hpp"
#include "skeptic/matrix.hpp"
#include "skeptic/transition.hpp"

namespace skeptic {

/// Loss value and its derivative with respect to the probabilities (or the
/// logits, for the unhinged loss).
struct LossOutput {
    double value = 0.0;
    std::vector<double> gradient;
    /// Set when a probability fell below kProbabilityFloor and was clamped.
    bool clamped = false;
};

struct LogLoss {};

struct UnhingedLoss {};

/// Loss correction with a precomputed inverse of T.
struct BackwardCorrection {
    TransitionMatrix transition;
    Matrix inverse;

    /// Inverts `transition`; throws CorrectionError when its condition
    /// number exceeds kMaxConditionNumber.
    explicit BackwardCorrection(TransitionMatrix t);
};

struct ForwardCorrection {
    TransitionMatrix transition;
};

struct SkepticalLoss {
    TransitionMatrix transition;
    double beta = 0.2;
    double k = 0.1;

    void validate() const;
};

using LossKind = std::variant<LogLoss, UnhingedLoss, BackwardCorrection, ForwardCorrection, SkepticalLoss>;

std::string loss_name(const LossKind& kind);

inline constexpr double kMaxConditionNumber = 1e8;

/// 2-norm condition number of a square matrix (infinite when singular).
double condition_number(const Matrix& m);

LossOutput log_loss(std::span<const double> probs, Label noisy_label);

/// One-vs-mean multiclass unhinged loss on raw logits:
/// 1 - z[label] + mean of the other logits. Gradient is w.r.t. the logits.
LossOutput unhinged_loss(std::span<const double> logits, Label noisy_label);

LossOutput backward_corrected_loss(std::span<const double> probs, Label noisy_label, const TransitionMatrix& t);
LossOutput backward_corrected_loss(std::span<const double> probs, Label noisy_label, const BackwardCorrection& c);

/// -ln(sum_y T[noisy, y] * probs[y])
LossOutput forward_corrected_loss(std::span<const double> probs, Label noisy_label, const TransitionMatrix& t);

/// f(p; k) = p^(1 - k^beta) / (1 - k^beta ln p), with f(0) = 0.
double magnification(double p, double k, double beta);

/// L_SK(p; k) = p^a (2/a - ln p) with a = k^beta. Increasing in p, bounded
/// by 2/a at p = 1; the quantity maximized by skeptical training.
double skeptical_objective(double p, double k, double beta);

/// dL_SK/dp = p^(a-1) (1 - a ln p), the reciprocal of magnification().
double skeptical_objective_derivative(double p, double k, double beta);

/// Emits L_SK(1) - L_SK(p) for the T-mixed probability p, so that every
/// loss in the toolkit is minimized and non-negative.
LossOutput skeptical_loss(std::span<const double> probs, Label noisy_label, const TransitionMatrix& t, double k,
                          double beta);

/// Which quantity LossOutput::gradient is taken with respect to.
enum class GradientSpace { probabilities, logits };

GradientSpace gradient_space(const LossKind& kind);

/// Dispatches on `kind`. `logits` and `probs` describe the same forward pass.
LossOutput evaluate_loss(const LossKind& kind, std::span<const double> logits, std::span<const double> probs,
                         Label noisy_label);

}  // namespace skeptic

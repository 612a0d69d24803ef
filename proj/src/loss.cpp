#include "skeptic/loss.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "skeptic/error.hpp"
#include "skeptic/model.hpp"

namespace skeptic {

namespace {

void check_label(std::size_t size, Label label) {
    if (label < 0 || static_cast<std::size_t>(label) >= size)
        throw IndexError("label " + std::to_string(label) + " outside [0, " + std::to_string(size) + ")");
}

Eigen::MatrixXd to_eigen(const Matrix& m) {
    Eigen::MatrixXd out(m.rows, m.cols);
    for (std::size_t r = 0; r < m.rows; ++r)
        for (std::size_t c = 0; c < m.cols; ++c) out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m(r, c);
    return out;
}

struct Clamped {
    double value;
    bool clamped;
};

Clamped floor_probability(double p) {
    if (p < kProbabilityFloor) return {kProbabilityFloor, true};
    return {p, false};
}

void check_skeptical_params(double k, double beta) {
    if (!(k > 0.0 && k < 1.0)) throw DomainError("k must lie in (0,1)");
    if (!(beta > 0.0 && beta < 1.0)) throw DomainError("beta must lie in (0,1)");
}

}  // namespace

double condition_number(const Matrix& m) {
    if (m.rows != m.cols || m.rows == 0) throw ShapeError("condition number needs a square matrix");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(to_eigen(m));
    const auto& s = svd.singularValues();
    const double smallest = s(s.size() - 1);
    if (smallest <= 0.0) return std::numeric_limits<double>::infinity();
    return s(0) / smallest;
}

BackwardCorrection::BackwardCorrection(TransitionMatrix t) : transition(std::move(t)) {
    const double cond = condition_number(transition.entries());
    if (!(cond <= kMaxConditionNumber)) {
        std::ostringstream msg;
        msg << "transition matrix is singular or ill-conditioned (condition number " << cond << " > "
            << kMaxConditionNumber << ")";
        throw CorrectionError(msg.str());
    }
    const Eigen::MatrixXd inv = to_eigen(transition.entries()).inverse();
    const std::size_t n = transition.label_count();
    inverse = Matrix(n, n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) inverse(r, c) = inv(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

void SkepticalLoss::validate() const { check_skeptical_params(k, beta); }

std::string loss_name(const LossKind& kind) {
    struct Visitor {
        std::string operator()(const LogLoss&) const { return "log"; }
        std::string operator()(const UnhingedLoss&) const { return "unhinged"; }
        std::string operator()(const BackwardCorrection&) const { return "backward"; }
        std::string operator()(const ForwardCorrection&) const { return "forward"; }
        std::string operator()(const SkepticalLoss&) const { return "skeptical"; }
    };
    return std::visit(Visitor{}, kind);
}

LossOutput log_loss(std::span<const double> probs, Label noisy_label) {
    check_label(probs.size(), noisy_label);
    const auto label = static_cast<std::size_t>(noisy_label);
    const Clamped p = floor_probability(probs[label]);
    LossOutput out;
    out.value = -std::log(p.value);
    out.gradient.assign(probs.size(), 0.0);
    out.gradient[label] = -1.0 / p.value;
    out.clamped = p.clamped;
    return out;
}

LossOutput unhinged_loss(std::span<const double> logits, Label noisy_label) {
    check_label(logits.size(), noisy_label);
    if (logits.size() < 2) throw ShapeError("unhinged loss needs at least 2 logits");
    const auto label = static_cast<std::size_t>(noisy_label);
    const double others = 1.0 / static_cast<double>(logits.size() - 1);
    LossOutput out;
    double mean_other = 0.0;
    out.gradient.assign(logits.size(), others);
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (i != label) mean_other += logits[i];
    }
    mean_other *= others;
    out.gradient[label] = -1.0;
    out.value = 1.0 - logits[label] + mean_other;
    return out;
}

LossOutput backward_corrected_loss(std::span<const double> probs, Label noisy_label, const BackwardCorrection& c) {
    check_label(probs.size(), noisy_label);
    if (probs.size() != c.transition.label_count()) throw ShapeError("probability vector length must equal |Y|");
    const auto row = c.inverse.row(static_cast<std::size_t>(noisy_label));
    LossOutput out;
    out.gradient.assign(probs.size(), 0.0);
    for (std::size_t y = 0; y < probs.size(); ++y) {
        const Clamped p = floor_probability(probs[y]);
        out.clamped = out.clamped || p.clamped;
        out.value -= row[y] * std::log(p.value);
        out.gradient[y] = -row[y] / p.value;
    }
    return out;
}

LossOutput backward_corrected_loss(std::span<const double> probs, Label noisy_label, const TransitionMatrix& t) {
    return backward_corrected_loss(probs, noisy_label, BackwardCorrection(t));
}

LossOutput forward_corrected_loss(std::span<const double> probs, Label noisy_label, const TransitionMatrix& t) {
    check_label(t.label_count(), noisy_label);
    const auto label = static_cast<std::size_t>(noisy_label);
    const Clamped p = floor_probability(t.mix(label, probs));
    LossOutput out;
    out.value = -std::log(p.value);
    out.clamped = p.clamped;
    out.gradient.resize(probs.size());
    for (std::size_t y = 0; y < probs.size(); ++y) out.gradient[y] = -t(label, y) / p.value;
    return out;
}

double magnification(double p, double k, double beta) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("magnification needs p in [0,1]");
    check_skeptical_params(k, beta);
    if (p == 0.0) return 0.0;
    const double a = std::pow(k, beta);
    return std::pow(p, 1.0 - a) / (1.0 - a * std::log(p));
}

double skeptical_objective(double p, double k, double beta) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("skeptical objective needs p in [0,1]");
    check_skeptical_params(k, beta);
    if (p == 0.0) return 0.0;
    const double a = std::pow(k, beta);
    return std::pow(p, a) * (2.0 / a - std::log(p));
}

double skeptical_objective_derivative(double p, double k, double beta) {
    if (!(p > 0.0 && p <= 1.0)) throw DomainError("skeptical derivative needs p in (0,1]");
    check_skeptical_params(k, beta);
    const double a = std::pow(k, beta);
    return std::pow(p, a - 1.0) * (1.0 - a * std::log(p));
}

LossOutput skeptical_loss(std::span<const double> probs, Label noisy_label, const TransitionMatrix& t, double k,
                          double beta) {
    check_label(t.label_count(), noisy_label);
    check_skeptical_params(k, beta);
    const auto label = static_cast<std::size_t>(noisy_label);
    const Clamped p = floor_probability(std::min(1.0, t.mix(label, probs)));
    LossOutput out;
    out.value = skeptical_objective(1.0, k, beta) - skeptical_objective(p.value, k, beta);
    out.clamped = p.clamped;
    const double slope = skeptical_objective_derivative(p.value, k, beta);
    out.gradient.resize(probs.size());
    for (std::size_t y = 0; y < probs.size(); ++y) out.gradient[y] = -slope * t(label, y);
    return out;
}

GradientSpace gradient_space(const LossKind& kind) {
    return std::holds_alternative<UnhingedLoss>(kind) ? GradientSpace::logits : GradientSpace::probabilities;
}

LossOutput evaluate_loss(const LossKind& kind, std::span<const double> logits, std::span<const double> probs,
                         Label noisy_label) {
    struct Visitor {
        std::span<const double> logits;
        std::span<const double> probs;
        Label label;
        LossOutput operator()(const LogLoss&) const { return log_loss(probs, label); }
        LossOutput operator()(const UnhingedLoss&) const { return unhinged_loss(logits, label); }
        LossOutput operator()(const BackwardCorrection& c) const { return backward_corrected_loss(probs, label, c); }
        LossOutput operator()(const ForwardCorrection& c) const {
            return forward_corrected_loss(probs, label, c.transition);
        }
        LossOutput operator()(const SkepticalLoss& c) const {
            return skeptical_loss(probs, label, c.transition, c.k, c.beta);
        }
    };
    return std::visit(Visitor{logits, probs, noisy_label}, kind);
}

}  // namespace skeptic

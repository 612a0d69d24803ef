#include "skeptic/transition.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "skeptic/error.hpp"

namespace skeptic {

namespace {
constexpr double kColumnTolerance = 1e-9;
}

TransitionMatrix::TransitionMatrix(Matrix entries) : entries_(std::move(entries)) {
    if (entries_.rows != entries_.cols) throw ShapeError("transition matrix must be square");
    if (entries_.rows < 2) throw ConfigError("transition matrix needs at least 2 labels");
    for (double v : entries_.data) {
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("transition entries must lie in [0,1]");
    }
    if (max_column_deviation() > kColumnTolerance)
        throw ConfigError("transition matrix columns must sum to 1 (deviation " +
                          std::to_string(max_column_deviation()) + ")");
}

TransitionMatrix TransitionMatrix::identity(std::size_t label_count) {
    if (label_count < 2) throw ConfigError("transition matrix needs at least 2 labels");
    Matrix m(label_count, label_count);
    for (std::size_t i = 0; i < label_count; ++i) m(i, i) = 1.0;
    return TransitionMatrix(std::move(m));
}

double TransitionMatrix::max_column_deviation() const {
    double worst = 0.0;
    for (std::size_t c = 0; c < entries_.cols; ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < entries_.rows; ++r) sum += entries_(r, c);
        worst = std::max(worst, std::abs(sum - 1.0));
    }
    return worst;
}

double TransitionMatrix::mix(std::size_t noisy, std::span<const double> probs) const {
    if (probs.size() != label_count()) throw ShapeError("probability vector length must equal |Y|");
    if (noisy >= label_count()) throw IndexError("noisy label out of range");
    double total = 0.0;
    const auto row = entries_.row(noisy);
    for (std::size_t c = 0; c < row.size(); ++c) total += row[c] * probs[c];
    return total;
}

void TransitionMatrix::blend_column(std::size_t clean, std::size_t noisy, double gamma) {
    // x + (1 - gamma)(e - x) equals gamma x + (1 - gamma) e and leaves a
    // column that already equals e untouched bit for bit.
    const double rate = 1.0 - gamma;
    for (std::size_t r = 0; r < entries_.rows; ++r) {
        const double target = r == noisy ? 1.0 : 0.0;
        entries_(r, clean) += rate * (target - entries_(r, clean));
    }
}

void EstimatorConfig::validate() const {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0,1]");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0,1)");
}

TransitionMatrix init_identity(std::size_t label_count) { return TransitionMatrix::identity(label_count); }

bool maybe_update(TransitionMatrix& estimate, std::span<const double> probs, Label noisy_label,
                  const EstimatorConfig& config) {
    if (probs.size() != estimate.label_count()) throw ShapeError("probability vector length must equal |Y|");
    if (noisy_label < 0 || static_cast<std::size_t>(noisy_label) >= estimate.label_count())
        throw IndexError("noisy label out of range");
    const auto top = static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
    if (!(probs[top] > 1.0 - config.epsilon)) return false;
    estimate.blend_column(top, static_cast<std::size_t>(noisy_label), config.gamma);
    return true;
}

TransitionMatrix empirical_transition(std::span<const Label> clean_labels, std::span<const Label> noisy_labels,
                                      std::size_t label_count) {
    if (clean_labels.size() != noisy_labels.size())
        throw ShapeError("clean and noisy label vectors differ in length");
    if (label_count < 2) throw ConfigError("transition matrix needs at least 2 labels");
    Matrix counts(label_count, label_count);
    std::vector<double> totals(label_count, 0.0);
    for (std::size_t i = 0; i < clean_labels.size(); ++i) {
        const Label y = clean_labels[i];
        const Label n = noisy_labels[i];
        if (y < 0 || n < 0 || static_cast<std::size_t>(y) >= label_count || static_cast<std::size_t>(n) >= label_count)
            throw IndexError("label at index " + std::to_string(i) + " out of range");
        counts(static_cast<std::size_t>(n), static_cast<std::size_t>(y)) += 1.0;
        totals[static_cast<std::size_t>(y)] += 1.0;
    }
    for (std::size_t c = 0; c < label_count; ++c) {
        if (totals[c] == 0.0) {
            counts(c, c) = 1.0;
            continue;
        }
        for (std::size_t r = 0; r < label_count; ++r) counts(r, c) /= totals[c];
    }
    return TransitionMatrix(std::move(counts));
}

void write_transition(const TransitionMatrix& matrix, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    out.precision(17);
    out << "labels=" << matrix.label_count() << '\n';
    for (std::size_t r = 0; r < matrix.label_count(); ++r) {
        for (std::size_t c = 0; c < matrix.label_count(); ++c) {
            if (c > 0) out << ' ';
            out << matrix(r, c);
        }
        out << '\n';
    }
    if (!out) throw FormatError("failed writing " + path.string());
}

TransitionMatrix read_transition(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open transition file " + path.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind("labels=", 0) != 0)
        throw FormatError(path.string() + ":1: expected header 'labels=<n>'");
    std::size_t n = 0;
    try {
        n = std::stoul(line.substr(7));
    } catch (const std::exception&) {
        throw FormatError(path.string() + ":1: bad label count");
    }
    if (n < 2) throw FormatError(path.string() + ":1: label count must be at least 2");
    Matrix m(n, n);
    for (std::size_t r = 0; r < n; ++r) {
        if (!std::getline(in, line)) throw FormatError(path.string() + ": missing row " + std::to_string(r));
        std::istringstream row(line);
        for (std::size_t c = 0; c < n; ++c) {
            if (!(row >> m(r, c)))
                throw FormatError(path.string() + ":" + std::to_string(r + 2) + ": expected " + std::to_string(n) +
                                  " values");
        }
        std::string extra;
        if (row >> extra) throw FormatError(path.string() + ":" + std::to_string(r + 2) + ": too many values");
    }
    try {
        return TransitionMatrix(std::move(m));
    } catch (const Error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

}  // namespace skeptic

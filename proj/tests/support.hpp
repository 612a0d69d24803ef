#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "skeptic/random.hpp"
#include "skeptic/transition.hpp"

namespace skeptic::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("skeptic_" + tag + "_" + std::to_string(std::hash<std::string>{}(tag) ^ counter()++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    static std::size_t& counter() {
        static std::size_t n = 0;
        return n;
    }
    std::filesystem::path path_;
};

/// Central differences of f at x.
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double step = 1e-5) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + step;
        const double up = f(x);
        x[i] = saved - step;
        const double down = f(x);
        x[i] = saved;
        out[i] = (up - down) / (2.0 * step);
    }
    return out;
}

/// ||a - b|| / max(||a||, ||b||), with a floor so two near-zero vectors compare equal.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-8});
}

/// Column-stochastic matrix with diagonal mass at least `diagonal_floor`.
inline TransitionMatrix random_transition(Rng& rng, std::size_t n, double diagonal_floor = 0.5) {
    Matrix m(n, n);
    for (std::size_t c = 0; c < n; ++c) {
        const double diag = rng.uniform(diagonal_floor, 1.0);
        double rest = 0.0;
        std::vector<double> off(n, 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c) continue;
            off[r] = rng.uniform01();
            rest += off[r];
        }
        for (std::size_t r = 0; r < n; ++r) m(r, c) = r == c ? diag : (1.0 - diag) * off[r] / rest;
    }
    return TransitionMatrix(std::move(m));
}

inline std::vector<double> random_vector(Rng& rng, std::size_t n, double scale) {
    std::vector<double> v(n);
    for (double& x : v) x = scale * rng.normal();
    return v;
}

}  // namespace skeptic::test

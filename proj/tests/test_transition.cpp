#include <doctest.h>

#include <fstream>

#include "skeptic/error.hpp"
#include "skeptic/loss.hpp"
#include "skeptic/model.hpp"
#include "skeptic/transition.hpp"
#include "support.hpp"

using namespace skeptic;

TEST_CASE("identity initialization") {
    const TransitionMatrix t = init_identity(3);
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c) CHECK(t(r, c) == (r == c ? 1.0 : 0.0));
    CHECK(t.max_column_deviation() == 0.0);
    CHECK_THROWS_AS(init_identity(1), ConfigError);
    CHECK_THROWS_AS(init_identity(0), ConfigError);

    const std::vector<double> p{0.2, 0.5, 0.3};
    CHECK(forward_corrected_loss(p, 1, t).value == log_loss(p, 1).value);
}

TEST_CASE("constructor validates entries") {
    Matrix neg(2, 2);
    neg(0, 0) = 1.2;
    neg(1, 0) = -0.2;
    neg(1, 1) = 1.0;
    CHECK_THROWS_AS(TransitionMatrix{neg}, ConfigError);
    Matrix off(2, 2);
    off(0, 0) = 0.5;
    off(1, 1) = 1.0;
    CHECK_THROWS_AS(TransitionMatrix{off}, ConfigError);
    CHECK_THROWS_AS(TransitionMatrix{Matrix(2, 3)}, ShapeError);
}

TEST_CASE("update threshold") {
    TransitionMatrix t = init_identity(3);
    EstimatorConfig cfg;
    cfg.epsilon = 0.1;
    cfg.gamma = 0.5;
    const std::vector<double> unsure{0.85, 0.1, 0.05};
    CHECK_FALSE(maybe_update(t, unsure, 1, cfg));
    CHECK(t == init_identity(3));
    const std::vector<double> edge{0.9, 0.05, 0.05};
    CHECK_FALSE(maybe_update(t, edge, 1, cfg));
    const std::vector<double> sure{0.95, 0.03, 0.02};
    CHECK(maybe_update(t, sure, 1, cfg));
}

TEST_CASE("agreeing update is a fixed point") {
    TransitionMatrix t = init_identity(3);
    const std::vector<double> p{0.01, 0.01, 0.98};
    for (double gamma : {0.1, 0.5, 0.9, 0.9999, 1.0}) {
        EstimatorConfig cfg;
        cfg.gamma = gamma;
        CHECK(maybe_update(t, p, 2, cfg));
        CHECK(t == init_identity(3));
    }
}

TEST_CASE("disagreeing update blends the column") {
    TransitionMatrix t = init_identity(3);
    EstimatorConfig cfg;
    cfg.gamma = 0.9;
    const std::vector<double> p{0.01, 0.01, 0.98};
    CHECK(maybe_update(t, p, 0, cfg));
    CHECK(t(0, 2) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(t(1, 2) == 0.0);
    CHECK(t(2, 2) == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(t(0, 0) == 1.0);
}

TEST_CASE("gamma one freezes the estimate") {
    TransitionMatrix t = init_identity(4);
    EstimatorConfig cfg;
    cfg.gamma = 1.0;
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> p(4, 0.0);
        p[rng.uniform_index(4)] = 1.0;
        maybe_update(t, p, static_cast<Label>(rng.uniform_index(4)), cfg);
    }
    CHECK(t == init_identity(4));
}

TEST_CASE("argmax ties resolve to the lowest index") {
    TransitionMatrix t = init_identity(2);
    EstimatorConfig cfg;
    cfg.epsilon = 0.6;
    cfg.gamma = 0.5;
    const std::vector<double> tie{0.5, 0.5};
    CHECK(maybe_update(t, tie, 1, cfg));
    CHECK(t(1, 0) == doctest::Approx(0.5));
    CHECK(t(1, 1) == 1.0);
}

TEST_CASE("estimator config validation") {
    EstimatorConfig cfg;
    cfg.validate();
    cfg.gamma = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.gamma = 1.1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.gamma = 0.5;
    cfg.epsilon = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("update input errors") {
    TransitionMatrix t = init_identity(3);
    const std::vector<double> p{1.0, 0.0};
    CHECK_THROWS_AS(maybe_update(t, p, 0, {}), ShapeError);
    const std::vector<double> q{1.0, 0.0, 0.0};
    CHECK_THROWS_AS(maybe_update(t, q, 3, {}), IndexError);
}

TEST_CASE("long random update runs stay column stochastic") {
    Rng rng(77);
    for (double gamma : {0.9999, 0.9, 0.5}) {
        TransitionMatrix t = init_identity(6);
        EstimatorConfig cfg;
        cfg.gamma = gamma;
        cfg.epsilon = 0.1;
        std::size_t fired = 0;
        for (int step = 0; step < 10000; ++step) {
            const auto probs = softmax(test::random_vector(rng, 6, 4.0));
            const double top = *std::max_element(probs.begin(), probs.end());
            const bool did = maybe_update(t, probs, static_cast<Label>(rng.uniform_index(6)), cfg);
            CHECK(did == (top > 0.9));
            fired += did ? 1 : 0;
        }
        CHECK(fired > 0);
        CHECK(t.max_column_deviation() < 1e-9);
        for (double v : t.entries().data) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("empirical transition") {
    const std::vector<Label> y{0, 0, 0, 0, 1};
    const std::vector<Label> noisy{0, 0, 1, 1, 1};
    const TransitionMatrix t = empirical_transition(y, noisy, 2);
    CHECK(t(0, 0) == 0.5);
    CHECK(t(1, 0) == 0.5);
    CHECK(t(0, 1) == 0.0);
    CHECK(t(1, 1) == 1.0);

    CHECK(empirical_transition(y, y, 3) == init_identity(3));  // class 2 unseen keeps its identity column
    const std::vector<Label> shorter{0, 1};
    CHECK_THROWS_AS(empirical_transition(y, shorter, 2), ShapeError);
    const std::vector<Label> bad{0, 0, 0, 0, 5};
    CHECK_THROWS_AS(empirical_transition(y, bad, 2), IndexError);

    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Label> a(40), b(40);
        for (std::size_t i = 0; i < 40; ++i) {
            a[i] = static_cast<Label>(rng.uniform_index(5));
            b[i] = static_cast<Label>(rng.uniform_index(5));
        }
        CHECK(empirical_transition(a, b, 5).max_column_deviation() < 1e-12);
    }
}

TEST_CASE("transition file round trip") {
    test::TempDir dir("transition");
    Rng rng(12);
    const TransitionMatrix t = test::random_transition(rng, 4);
    write_transition(t, dir / "t.txt");
    CHECK(read_transition(dir / "t.txt") == t);

    std::ifstream in(dir / "t.txt");
    std::string header;
    std::getline(in, header);
    CHECK(header == "labels=4");
}

TEST_CASE("malformed transition files") {
    test::TempDir dir("transition_bad");
    const auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream(dir / name) << text;
        return dir / name;
    };
    CHECK_THROWS_AS(read_transition(dir / "missing.txt"), FormatError);
    CHECK_THROWS_AS(read_transition(write("nohdr", "1 0\n0 1\n")), FormatError);
    CHECK_THROWS_AS(read_transition(write("short", "labels=2\n1 0\n")), FormatError);
    CHECK_THROWS_AS(read_transition(write("wide", "labels=2\n1 0 0\n0 1\n")), FormatError);
    CHECK_THROWS_AS(read_transition(write("cols", "labels=2\n0.5 0\n0 1\n")), FormatError);
    try {
        read_transition(write("row3", "labels=2\n1 0\nx 1\n"));
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
}

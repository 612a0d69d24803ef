#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "skeptic/model.hpp"
#include "skeptic/noise.hpp"
#include "skeptic/training.hpp"

namespace skeptic {

enum class DataSource { synth, idx, csv };

struct DataConfig {
    DataSource source = DataSource::synth;
    std::size_t label_count = 10;
    // synth
    std::size_t per_class = 200;
    std::size_t test_per_class = 100;
    std::size_t dim = 20;
    double spread = 0.5;
    std::uint64_t seed = 1;
    // idx
    std::filesystem::path train_images, train_labels, test_images, test_labels;
    // csv
    std::filesystem::path train_csv, test_csv;
    /// Keep only the first `subset` training samples (0 keeps all).
    std::size_t subset = 0;
};

/// Where the transition matrix of a transition-based loss comes from.
enum class TransitionSource {
    automatic,  // estimate for skeptical, empirical for forward/backward
    estimate,   // identity start, confidence-gated updates
    empirical,  // counted from the sidecar's true and noisy labels
    file,       // read from transition_file
    identity,
};

struct LossConfig {
    std::string kind = "log";
    double beta = 0.2;
    std::optional<double> k;  // defaults to 1/|Y|
    double gamma = 0.9999;
    double epsilon = 0.1;
    std::size_t warmup_epochs = 0;
    TransitionSource transition = TransitionSource::automatic;
    std::filesystem::path transition_file;
};

struct NoiseConfig {
    NoiseKind kind = NoiseKind::symmetric;
    double rate = 0.0;
    std::uint64_t seed = 1;
    std::filesystem::path sidecar;
    /// Train the confusing-noise baseline on symmetric-noised data of the
    /// same rate instead of the clean data.
    bool baseline_on_noisy = false;
};

struct SweepConfig {
    std::vector<double> rates{0.4};
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    /// Loss specs, optionally with a transition source: `skeptical:empirical`.
    std::vector<std::string> losses{"log", "forward:empirical", "skeptical:empirical"};
    bool partial_mean = true;
};

struct RunConfig {
    DataConfig data;
    std::vector<std::size_t> hidden_layers{64};
    Activation activation = Activation::relu;
    OptimizerConfig optimizer;
    /// Explicit schedule; when absent the rate decays by 0.2 at 60% and 80%
    /// of the epoch budget.
    std::optional<std::vector<LrStep>> lr_schedule;
    std::size_t epochs = 30;
    std::uint64_t seed = 1;
    LossConfig loss;
    NoiseConfig noise;
    SweepConfig sweep;
    std::filesystem::path out_dir = "out";
    std::filesystem::path model_path;
    std::size_t oracle_trials = 50;
    std::uint64_t oracle_seed = 1;

    /// Sets one `section.key` entry; throws ConfigError on unknown keys or
    /// unparsable values.
    void set(const std::string& key, const std::string& value);

    /// Applies every entry of an INI file (sections map to key prefixes).
    void load_file(const std::filesystem::path& path);

    std::vector<LrStep> effective_schedule() const;
    TrainingOptions training_options() const;
};

std::vector<LrStep> default_schedule(std::size_t epochs);

}  // namespace skeptic

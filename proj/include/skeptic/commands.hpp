#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skeptic/config.hpp"
#include "skeptic/dataset.hpp"
#include "skeptic/loss.hpp"
#include "skeptic/metrics.hpp"
#include "skeptic/training.hpp"

namespace skeptic {

/// Process exit codes of the command line tool.
enum ExitCode : int {
    kExitSuccess = 0,
    kExitValidation = 1,
    kExitNumeric = 2,
    kExitOracle = 3,
};

struct Datasets {
    LabeledDataset train;
    std::optional<LabeledDataset> test;
};

/// Loads (or synthesizes) the clean training and test sets.
Datasets load_datasets(const DataConfig& config);

/// Noisy copy of `clean` per `noise`. Confusing noise first trains a
/// log-loss baseline with the run's network and optimizer settings.
LabeledDataset generate_noisy(const RunConfig& config, const LabeledDataset& clean, const NoiseConfig& noise);

struct LossSelection {
    LossKind loss;
    bool estimate_transition = false;
    TransitionSource source = TransitionSource::automatic;
};

/// Builds the loss named `kind` for training on `train` (whose true labels,
/// when present, supply the empirical transition matrix).
LossSelection build_loss(const std::string& kind, TransitionSource source, const RunConfig& config,
                         const LabeledDataset& train);

struct RunOutcome {
    TrainingResult training;
    ExperimentRecord record;
};

RunOutcome run_training(const RunConfig& config, const std::string& loss_kind, TransitionSource source,
                        const LabeledDataset& train, const LabeledDataset* test);

nlohmann::json record_to_json(const ExperimentRecord& record);

void save_model(const NetworkState& model, const std::filesystem::path& path);
NetworkState load_model(const std::filesystem::path& path);

struct SweepRow {
    std::string loss;
    NoiseKind kind = NoiseKind::symmetric;
    double rate = 0.0;
    std::optional<double> test_error;
    std::optional<double> train_error;
    std::optional<double> precision;
    std::optional<double> recall;
};

struct SweepResult {
    std::vector<SweepRow> aggregated;  // one row per (loss, rate)
    std::vector<std::pair<std::uint64_t, SweepRow>> runs;  // every (seed, row)
};

SweepResult run_sweep(const RunConfig& config, std::ostream& log);

int cmd_gen_noise(const RunConfig& config, std::ostream& out);
int cmd_train(const RunConfig& config, std::ostream& out);
int cmd_evaluate(const RunConfig& config, std::ostream& out);
int cmd_verify_oracle(const RunConfig& config, std::ostream& out);
int cmd_sweep(const RunConfig& config, std::ostream& out);

/// Full command line entry point; maps exceptions onto ExitCode values.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace skeptic

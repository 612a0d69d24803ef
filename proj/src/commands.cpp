#include "skeptic/commands.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <map>

#include "skeptic/data_io.hpp"
#include "skeptic/error.hpp"
#include "skeptic/noise.hpp"
#include "skeptic/oracle.hpp"
#include "skeptic/transition.hpp"

namespace skeptic {

namespace {

std::string format_number(double value) {
    char buf[64];
    const auto result = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, result.ptr);
}

std::string format_optional(const std::optional<double>& value) { return value ? format_number(*value) : ""; }

nlohmann::json optional_json(const std::optional<double>& value) {
    return value ? nlohmann::json(*value) : nlohmann::json(nullptr);
}

std::string transition_source_name(TransitionSource source) {
    switch (source) {
        case TransitionSource::automatic: return "auto";
        case TransitionSource::estimate: return "estimate";
        case TransitionSource::empirical: return "empirical";
        case TransitionSource::file: return "file";
        case TransitionSource::identity: return "identity";
    }
    return "auto";
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    return out;
}

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw FormatError("cannot create output directory " + dir.string() + ": " + ec.message());
}

LabeledDataset first_n(const LabeledDataset& data, std::size_t n) {
    if (n == 0 || n >= data.size()) return data;
    std::vector<std::size_t> indices(n);
    for (std::size_t i = 0; i < n; ++i) indices[i] = i;
    return data.subset(indices);
}

std::filesystem::path sidecar_path(const RunConfig& config) {
    return config.noise.sidecar.empty() ? config.out_dir / "sidecar.csv" : config.noise.sidecar;
}

// Clean training data with the configured sidecar applied, if any.
LabeledDataset training_set(const RunConfig& config, const Datasets& data, std::optional<SidecarFile>& sidecar) {
    if (config.noise.sidecar.empty()) return data.train;
    sidecar = read_sidecar(config.noise.sidecar, data.train.size());
    if (sidecar->label_count != data.train.label_count)
        throw AuditError("sidecar label count " + std::to_string(sidecar->label_count) +
                         " differs from dataset label count " + std::to_string(data.train.label_count));
    return apply_sidecar(data.train, *sidecar);
}

std::pair<std::string, TransitionSource> split_loss_spec(const std::string& spec) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos) return {spec, TransitionSource::automatic};
    RunConfig probe;
    probe.set("loss.transition", spec.substr(colon + 1));
    return {spec.substr(0, colon), probe.loss.transition};
}

}  // namespace

Datasets load_datasets(const DataConfig& config) {
    Datasets out;
    switch (config.source) {
        case DataSource::synth: {
            const LabeledDataset all = synth_clusters(config.label_count, config.per_class + config.test_per_class,
                                                      config.dim, config.spread, config.seed);
            // Labels cycle through the classes, so a prefix split keeps every
            // class at exactly per_class training samples.
            const std::size_t train_n = config.per_class * config.label_count;
            std::vector<std::size_t> train_idx(train_n), test_idx(all.size() - train_n);
            for (std::size_t i = 0; i < train_n; ++i) train_idx[i] = i;
            for (std::size_t i = train_n; i < all.size(); ++i) test_idx[i - train_n] = i;
            out.train = all.subset(train_idx);
            if (!test_idx.empty()) out.test = all.subset(test_idx);
            break;
        }
        case DataSource::idx:
            if (config.train_images.empty() || config.train_labels.empty())
                throw ConfigError("idx source needs data.train_images and data.train_labels");
            out.train = load_idx(config.train_images, config.train_labels, config.label_count);
            if (!config.test_images.empty())
                out.test = load_idx(config.test_images, config.test_labels, config.label_count);
            break;
        case DataSource::csv:
            if (config.train_csv.empty()) throw ConfigError("csv source needs data.train_csv");
            out.train = load_csv(config.train_csv, config.label_count);
            if (!config.test_csv.empty()) out.test = load_csv(config.test_csv, config.label_count);
            break;
    }
    out.train = first_n(out.train, config.subset);
    return out;
}

LabeledDataset generate_noisy(const RunConfig& config, const LabeledDataset& clean, const NoiseConfig& noise) {
    const NoiseSpec spec{noise.kind, noise.rate, noise.seed};
    spec.validate();
    if (noise.kind == NoiseKind::symmetric) return symmetric_noise(clean, spec);

    LabeledDataset baseline_data = clean;
    if (noise.baseline_on_noisy) baseline_data = symmetric_noise(clean, {NoiseKind::symmetric, noise.rate, noise.seed});
    TrainingOptions options = config.training_options();
    options.seed = noise.seed;
    options.log_epochs = false;
    const TrainingResult baseline = train_model(baseline_data, nullptr, LogLoss{}, options);
    return confusing_noise(clean, spec, baseline.model);
}

LossSelection build_loss(const std::string& kind, TransitionSource source, const RunConfig& config,
                         const LabeledDataset& train) {
    LossSelection out;
    out.source = source;
    if (kind == "log") {
        out.loss = LogLoss{};
        return out;
    }
    if (kind == "unhinged") {
        out.loss = UnhingedLoss{};
        return out;
    }
    if (kind != "backward" && kind != "forward" && kind != "skeptical")
        throw ConfigError("unknown loss '" + kind + "' (log, unhinged, backward, forward, skeptical)");

    if (source == TransitionSource::automatic)
        source = kind == "skeptical" ? TransitionSource::estimate : TransitionSource::empirical;
    out.source = source;

    const std::size_t labels = train.label_count;
    TransitionMatrix transition = TransitionMatrix::identity(labels);
    switch (source) {
        case TransitionSource::estimate:
            if (kind == "backward") throw ConfigError("backward correction needs a fixed transition matrix");
            out.estimate_transition = true;
            break;
        case TransitionSource::empirical:
            transition = empirical_transition(train.true_labels ? *train.true_labels : train.labels, train.labels, labels);
            break;
        case TransitionSource::file:
            if (config.loss.transition_file.empty()) throw ConfigError("transition source 'file' needs loss.transition_file");
            transition = read_transition(config.loss.transition_file);
            if (transition.label_count() != labels) throw ShapeError("transition file size differs from the label count");
            break;
        case TransitionSource::identity:
        case TransitionSource::automatic:
            break;
    }

    if (kind == "backward") {
        out.loss = BackwardCorrection(std::move(transition));
    } else if (kind == "forward") {
        out.loss = ForwardCorrection{std::move(transition)};
    } else {
        SkepticalLoss loss{std::move(transition), config.loss.beta,
                           config.loss.k.value_or(1.0 / static_cast<double>(labels))};
        loss.validate();
        out.loss = std::move(loss);
    }
    return out;
}

RunOutcome run_training(const RunConfig& config, const std::string& loss_kind, TransitionSource source,
                        const LabeledDataset& train, const LabeledDataset* test) {
    LossSelection selection = build_loss(loss_kind, source, config, train);
    TrainingOptions options = config.training_options();
    options.estimate_transition = selection.estimate_transition;
    RunOutcome outcome;
    outcome.training = train_model(train, test, std::move(selection.loss), options);
    outcome.record = evaluate_model(outcome.training.model, train, test);
    outcome.record.per_epoch = outcome.training.epochs;
    return outcome;
}

nlohmann::json record_to_json(const ExperimentRecord& record) {
    nlohmann::json j;
    j["test_error"] = optional_json(record.test_error);
    j["train_error_vs_true"] = record.train_error_vs_true;
    j["noise_rate"] = record.noise_rate;
    j["recovery_precision"] = optional_json(record.recovery_precision);
    j["recovery_recall"] = optional_json(record.recovery_recall);
    nlohmann::json epochs = nlohmann::json::array();
    for (const EpochLog& e : record.per_epoch) {
        epochs.push_back({{"epoch", e.epoch},
                          {"mean_loss", e.mean_loss},
                          {"noisy_fit_accuracy", e.noisy_fit_accuracy},
                          {"true_accuracy", e.true_accuracy},
                          {"test_accuracy", optional_json(e.test_accuracy)}});
    }
    j["per_epoch"] = std::move(epochs);
    return j;
}

void save_model(const NetworkState& model, const std::filesystem::path& path) {
    nlohmann::json j;
    j["layer_sizes"] = model.spec.layer_sizes;
    j["activation"] = to_string(model.spec.activation);
    j["seed"] = model.spec.seed;
    j["step_count"] = model.step_count;
    nlohmann::json layers = nlohmann::json::array();
    for (const LayerParams& layer : model.params.layers)
        layers.push_back({{"weights", layer.weights.data}, {"biases", layer.biases}});
    j["layers"] = std::move(layers);
    open_output(path) << j.dump() << '\n';
}

NetworkState load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open model " + path.string());
    try {
        const nlohmann::json j = nlohmann::json::parse(in);
        NetworkSpec spec;
        spec.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
        spec.activation = parse_activation(j.at("activation").get<std::string>());
        spec.seed = j.at("seed").get<std::uint64_t>();
        NetworkState state = init_network(spec);
        const auto& layers = j.at("layers");
        if (layers.size() != state.params.layers.size()) throw FormatError("layer count mismatch");
        for (std::size_t l = 0; l < layers.size(); ++l) {
            auto weights = layers[l].at("weights").get<std::vector<double>>();
            auto biases = layers[l].at("biases").get<std::vector<double>>();
            LayerParams& target = state.params.layers[l];
            if (weights.size() != target.weights.data.size() || biases.size() != target.biases.size())
                throw FormatError("layer " + std::to_string(l) + " has the wrong number of parameters");
            target.weights.data = std::move(weights);
            target.biases = std::move(biases);
        }
        state.step_count = j.value("step_count", std::uint64_t{0});
        return state;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed model file " + path.string() + ": " + e.what());
    }
}

int cmd_gen_noise(const RunConfig& config, std::ostream& out) {
    const NoiseSpec spec{config.noise.kind, config.noise.rate, config.noise.seed};
    spec.validate();
    const Datasets data = load_datasets(config.data);
    const LabeledDataset noisy = generate_noisy(config, data.train, config.noise);

    // Audit: every changed label must differ from the truth by construction.
    std::size_t flips = 0;
    for (std::size_t i = 0; i < noisy.size(); ++i) {
        if (noisy.labels[i] != (*noisy.true_labels)[i]) ++flips;
    }
    if (flips != flip_count(spec.rate, noisy.size()))
        throw AuditError("flip count " + std::to_string(flips) + " differs from the requested " +
                         std::to_string(flip_count(spec.rate, noisy.size())));

    const std::filesystem::path path = sidecar_path(config);
    if (path.has_parent_path()) ensure_dir(path.parent_path());
    write_sidecar(make_sidecar(noisy, spec), path);
    out << "wrote " << path.string() << '\n'
        << "kind=" << to_string(spec.kind) << " requested_rate=" << format_number(spec.rate)
        << " measured_rate=" << format_number(noise_rate(noisy)) << " flips=" << flips << " samples=" << noisy.size()
        << " flips_valid=true\n";
    return kExitSuccess;
}

int cmd_train(const RunConfig& config, std::ostream& out) {
    const Datasets data = load_datasets(config.data);
    std::optional<SidecarFile> sidecar;
    const LabeledDataset train = training_set(config, data, sidecar);
    const LabeledDataset* test = data.test ? &*data.test : nullptr;

    const RunOutcome outcome = run_training(config, config.loss.kind, config.loss.transition, train, test);
    ensure_dir(config.out_dir);

    nlohmann::json result;
    result["loss"] = config.loss.kind;
    const LossSelection selection = build_loss(config.loss.kind, config.loss.transition, config, train);
    result["transition_source"] = std::holds_alternative<LogLoss>(selection.loss) ||
                                          std::holds_alternative<UnhingedLoss>(selection.loss)
                                      ? nlohmann::json(nullptr)
                                      : nlohmann::json(transition_source_name(selection.source));
    result["epochs"] = config.epochs;
    result["seed"] = config.seed;
    result["samples"] = train.size();
    result["noise_kind"] = sidecar ? nlohmann::json(to_string(sidecar->kind)) : nlohmann::json(nullptr);
    result["sidecar_rate"] = sidecar ? nlohmann::json(sidecar->rate) : nlohmann::json(nullptr);
    result["transition_updates"] = outcome.training.transition_updates;
    result["clamped_samples"] = outcome.training.clamped_samples;
    result.update(record_to_json(outcome.record));
    open_output(config.out_dir / "result.json") << result.dump(2) << '\n';

    {
        std::ofstream epochs = open_output(config.out_dir / "epochs.csv");
        epochs << "epoch,mean_loss,noisy_fit_accuracy,true_accuracy,test_accuracy\n";
        for (const EpochLog& e : outcome.record.per_epoch)
            epochs << e.epoch << ',' << format_number(e.mean_loss) << ',' << format_number(e.noisy_fit_accuracy) << ','
                   << format_number(e.true_accuracy) << ',' << format_optional(e.test_accuracy) << '\n';
    }
    if (outcome.training.transition) write_transition(*outcome.training.transition, config.out_dir / "transition.txt");
    save_model(outcome.training.model, config.model_path.empty() ? config.out_dir / "model.json" : config.model_path);

    out << "loss=" << config.loss.kind << " test_error=" << format_optional(outcome.record.test_error)
        << " train_error_vs_true=" << format_number(outcome.record.train_error_vs_true)
        << " precision=" << format_optional(outcome.record.recovery_precision)
        << " recall=" << format_optional(outcome.record.recovery_recall) << '\n';
    return kExitSuccess;
}

int cmd_evaluate(const RunConfig& config, std::ostream& out) {
    const std::filesystem::path model_path =
        config.model_path.empty() ? config.out_dir / "model.json" : config.model_path;
    const NetworkState model = load_model(model_path);
    const Datasets data = load_datasets(config.data);
    std::optional<SidecarFile> sidecar;
    const LabeledDataset train = training_set(config, data, sidecar);
    if (model.spec.input_dim() != train.dim() || model.spec.label_count() != train.label_count)
        throw ShapeError("model shape does not match the dataset");
    if (!sidecar) out << "warning: no sidecar given, true labels unknown; recovery metrics undefined\n";

    const ExperimentRecord record = evaluate_model(model, train, data.test ? &*data.test : nullptr);
    nlohmann::json result = record_to_json(record);
    result.erase("per_epoch");
    ensure_dir(config.out_dir);
    open_output(config.out_dir / "result.json") << result.dump(2) << '\n';
    out << result.dump(2) << '\n';
    return kExitSuccess;
}

int cmd_verify_oracle(const RunConfig& config, std::ostream& out) {
    if (config.oracle_trials == 0) {
        out << "warning: 0 trials requested, nothing was checked\noracle: PASS\n";
        return kExitSuccess;
    }
    const oracle::OracleReport report = oracle::run_oracle_suite(config.oracle_trials, config.oracle_seed);
    oracle::print_report(out, report);
    return report.passed() ? kExitSuccess : kExitOracle;
}

SweepResult run_sweep(const RunConfig& config, std::ostream& log) {
    if (config.sweep.rates.empty()) throw ConfigError("sweep needs at least one rate");
    if (config.sweep.losses.empty()) throw ConfigError("sweep needs at least one loss");
    if (config.sweep.seeds.empty()) throw ConfigError("sweep needs at least one seed");
    if (config.sweep.partial_mean && config.sweep.seeds.size() < 3)
        throw ConfigError("partial mean needs at least 3 seeds, got " + std::to_string(config.sweep.seeds.size()));
    for (double rate : config.sweep.rates) NoiseSpec{config.noise.kind, rate, 0}.validate();
    std::vector<std::pair<std::string, TransitionSource>> losses;
    for (const std::string& spec : config.sweep.losses) losses.push_back(split_loss_spec(spec));

    const Datasets data = load_datasets(config.data);
    const LabeledDataset* test = data.test ? &*data.test : nullptr;

    SweepResult result;
    // Keyed by (loss index, rate index).
    std::map<std::pair<std::size_t, std::size_t>, std::vector<SweepRow>> cells;
    for (std::uint64_t seed : config.sweep.seeds) {
        for (std::size_t r = 0; r < config.sweep.rates.size(); ++r) {
            NoiseConfig noise = config.noise;
            noise.rate = config.sweep.rates[r];
            noise.seed = seed;
            const LabeledDataset noisy = generate_noisy(config, data.train, noise);
            for (std::size_t l = 0; l < losses.size(); ++l) {
                RunConfig run = config;
                run.seed = seed;
                const RunOutcome outcome = run_training(run, losses[l].first, losses[l].second, noisy, test);
                SweepRow row{config.sweep.losses[l],     noise.kind,
                             noise.rate,                 outcome.record.test_error,
                             outcome.record.train_error_vs_true, outcome.record.recovery_precision,
                             outcome.record.recovery_recall};
                log << "seed=" << seed << " rate=" << format_number(noise.rate) << " loss=" << row.loss
                    << " test_err=" << format_optional(row.test_error) << " train_err=" << format_optional(row.train_error)
                    << " precision=" << format_optional(row.precision) << " recall=" << format_optional(row.recall)
                    << '\n';
                cells[{l, r}].push_back(row);
                result.runs.emplace_back(seed, row);
            }
        }
    }

    const auto aggregate = [&](const std::vector<SweepRow>& rows, std::optional<double> SweepRow::*field) {
        std::vector<std::optional<double>> values;
        for (const SweepRow& row : rows) values.push_back(row.*field);
        if (config.sweep.partial_mean) return partial_mean(std::span<const std::optional<double>>(values));
        std::optional<double> total;
        std::size_t count = 0;
        for (const auto& v : values) {
            if (!v) continue;
            total = total.value_or(0.0) + *v;
            ++count;
        }
        if (total) *total /= static_cast<double>(count);
        return total;
    };
    for (std::size_t l = 0; l < losses.size(); ++l) {
        for (std::size_t r = 0; r < config.sweep.rates.size(); ++r) {
            const auto& rows = cells[{l, r}];
            result.aggregated.push_back({config.sweep.losses[l], config.noise.kind, config.sweep.rates[r],
                                         aggregate(rows, &SweepRow::test_error), aggregate(rows, &SweepRow::train_error),
                                         aggregate(rows, &SweepRow::precision), aggregate(rows, &SweepRow::recall)});
        }
    }
    return result;
}

int cmd_sweep(const RunConfig& config, std::ostream& out) {
    const SweepResult result = run_sweep(config, out);
    ensure_dir(config.out_dir);
    std::ofstream csv = open_output(config.out_dir / "sweep.csv");
    csv << "loss,kind,rate,test_err,train_err,precision,recall\n";
    for (const SweepRow& row : result.aggregated)
        csv << row.loss << ',' << to_string(row.kind) << ',' << format_number(row.rate) << ','
            << format_optional(row.test_error) << ',' << format_optional(row.train_error) << ','
            << format_optional(row.precision) << ',' << format_optional(row.recall) << '\n';
    std::ofstream runs = open_output(config.out_dir / "sweep_runs.csv");
    runs << "loss,kind,rate,seed,test_err,train_err,precision,recall\n";
    for (const auto& [seed, row] : result.runs)
        runs << row.loss << ',' << to_string(row.kind) << ',' << format_number(row.rate) << ',' << seed << ','
             << format_optional(row.test_error) << ',' << format_optional(row.train_error) << ','
             << format_optional(row.precision) << ',' << format_optional(row.recall) << '\n';
    out << "wrote " << (config.out_dir / "sweep.csv").string() << " (" << result.aggregated.size() << " rows)\n";
    return kExitSuccess;
}

}  // namespace skeptic

#include <CLI11.hpp>

#include <functional>
#include <map>
#include <ostream>

#include "skeptic/commands.hpp"
#include "skeptic/error.hpp"

namespace skeptic {

namespace {

struct Overrides {
    std::string config_file;
    std::vector<std::string> sets;
    // flag name -> value, applied after the file and --set entries
    std::vector<std::pair<std::string, std::string>> flags;
};

void add_flag(CLI::App* cmd, Overrides& ov, const std::string& flag, const std::string& key, const std::string& help) {
    cmd->add_option_function<std::string>(
        "--" + flag, [&ov, key](const std::string& value) { ov.flags.emplace_back(key, value); }, help);
}

void add_common(CLI::App* cmd, Overrides& ov) {
    cmd->add_option("--config,-c", ov.config_file, "INI configuration file");
    cmd->add_option("--set", ov.sets, "override as section.key=value (repeatable)");
    add_flag(cmd, ov, "out", "run.out", "output directory");
}

void add_data_flags(CLI::App* cmd, Overrides& ov) {
    add_flag(cmd, ov, "sidecar", "noise.sidecar", "noise sidecar file");
}

void add_training_flags(CLI::App* cmd, Overrides& ov) {
    add_flag(cmd, ov, "epochs", "run.epochs", "training epochs");
    add_flag(cmd, ov, "loss", "loss.kind", "log, unhinged, backward, forward or skeptical");
    add_flag(cmd, ov, "beta", "loss.beta", "skeptical loss exponent");
    add_flag(cmd, ov, "k", "loss.k", "skeptical loss k (number or auto)");
    add_flag(cmd, ov, "gamma", "loss.gamma", "transition update retention");
    add_flag(cmd, ov, "epsilon", "loss.epsilon", "transition update confidence margin");
    add_flag(cmd, ov, "warmup", "loss.warmup", "epochs before transition updates start");
    add_flag(cmd, ov, "transition", "loss.transition", "auto, estimate, empirical, file or identity");
}

RunConfig build_config(const Overrides& ov) {
    RunConfig config;
    if (!ov.config_file.empty()) config.load_file(ov.config_file);
    for (const std::string& entry : ov.sets) {
        const auto eq = entry.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects section.key=value, got '" + entry + "'");
        config.set(entry.substr(0, eq), entry.substr(eq + 1));
    }
    for (const auto& [key, value] : ov.flags) {
        if (key == "loss.transition_file") {
            config.set(key, value);
            config.set("loss.transition", "file");
        } else {
            config.set(key, value);
        }
    }
    return config;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Label-noise robust training toolkit"};
    app.require_subcommand(1);

    Overrides ov;
    std::function<int(const RunConfig&, std::ostream&)> action;
    const auto subcommand = [&](const std::string& name, const std::string& help, auto fn) {
        CLI::App* cmd = app.add_subcommand(name, help);
        cmd->callback([&action, fn] { action = fn; });
        add_common(cmd, ov);
        return cmd;
    };

    CLI::App* gen = subcommand("gen-noise", "generate a noisy-label sidecar", cmd_gen_noise);
    add_flag(gen, ov, "kind", "noise.kind", "symmetric or confusing");
    add_flag(gen, ov, "rate", "noise.rate", "noise rate in [0, 0.5)");
    add_flag(gen, ov, "seed", "noise.seed", "noise seed");
    add_flag(gen, ov, "sidecar", "noise.sidecar", "sidecar output path");
    add_flag(gen, ov, "epochs", "run.epochs", "baseline training epochs (confusing noise)");

    CLI::App* train = subcommand("train", "train a model", cmd_train);
    add_data_flags(train, ov);
    add_training_flags(train, ov);
    add_flag(train, ov, "seed", "run.seed", "training seed");
    add_flag(train, ov, "transition-file", "loss.transition_file", "transition matrix file (implies --transition file)");
    add_flag(train, ov, "model", "run.model", "checkpoint output path");

    CLI::App* evaluate = subcommand("evaluate", "evaluate a saved model", cmd_evaluate);
    add_data_flags(evaluate, ov);
    add_flag(evaluate, ov, "model", "run.model", "checkpoint path");

    CLI::App* oracle = subcommand("verify-oracle", "run the randomized distribution oracle", cmd_verify_oracle);
    add_flag(oracle, ov, "trials", "oracle.trials", "number of random instances");
    add_flag(oracle, ov, "seed", "oracle.seed", "oracle seed");

    CLI::App* sweep = subcommand("sweep", "sweep noise rates over seeds and losses", cmd_sweep);
    add_training_flags(sweep, ov);
    add_flag(sweep, ov, "kind", "noise.kind", "symmetric or confusing");
    add_flag(sweep, ov, "rates", "sweep.rates", "comma-separated noise rates");
    add_flag(sweep, ov, "seeds", "sweep.seeds", "comma-separated seeds");
    add_flag(sweep, ov, "losses", "sweep.losses", "comma-separated loss[:transition] specs");
    add_flag(sweep, ov, "transition-file", "loss.transition_file", "transition matrix file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitSuccess;
    } catch (const CLI::ParseError& e) {
        for (CLI::App* sub : app.get_subcommands()) {
            if (sub->count("--help") > 0) {
                out << sub->help();
                return kExitSuccess;
            }
        }
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    }

    try {
        const RunConfig config = build_config(ov);
        return action(config, out);
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const OracleError& e) {
        err << "oracle deviation: " << e.what() << '\n';
        return kExitOracle;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    }
}

}  // namespace skeptic

#include "skeptic/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>

#include "skeptic/error.hpp"

namespace skeptic {

namespace {

std::string trim(const std::string& text) {
    const auto first = text.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = text.find_last_not_of(" \t\r");
    return text.substr(first, last - first + 1);
}

template <typename T>
T parse_value(const std::string& key, const std::string& raw) {
    const std::string text = trim(raw);
    T value{};
    const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || result.ec != std::errc() || result.ptr != text.data() + text.size())
        throw ConfigError("bad value '" + raw + "' for " + key);
    return value;
}

bool parse_bool(const std::string& key, const std::string& raw) {
    const std::string text = trim(raw);
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError("bad boolean '" + raw + "' for " + key);
}

std::vector<std::string> split_list(const std::string& raw) {
    std::vector<std::string> items;
    std::string current;
    for (char c : raw) {
        if (c == ',') {
            items.push_back(trim(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    items.push_back(trim(current));
    if (items.size() == 1 && items[0].empty()) items.clear();
    return items;
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& raw) {
    std::vector<T> out;
    for (const std::string& item : split_list(raw)) out.push_back(parse_value<T>(key, item));
    return out;
}

std::vector<LrStep> parse_schedule(const std::string& key, const std::string& raw) {
    std::vector<LrStep> out;
    for (const std::string& item : split_list(raw)) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw ConfigError(key + " entries must look like epoch:multiplier");
        out.push_back({parse_value<std::size_t>(key, item.substr(0, colon)),
                       parse_value<double>(key, item.substr(colon + 1))});
    }
    return out;
}

TransitionSource parse_transition_source(const std::string& raw) {
    const std::string text = trim(raw);
    if (text == "auto") return TransitionSource::automatic;
    if (text == "estimate") return TransitionSource::estimate;
    if (text == "empirical") return TransitionSource::empirical;
    if (text == "file") return TransitionSource::file;
    if (text == "identity") return TransitionSource::identity;
    throw ConfigError("unknown transition source '" + raw + "' (auto, estimate, empirical, file, identity)");
}

DataSource parse_source(const std::string& raw) {
    const std::string text = trim(raw);
    if (text == "synth") return DataSource::synth;
    if (text == "idx") return DataSource::idx;
    if (text == "csv") return DataSource::csv;
    throw ConfigError("unknown data source '" + raw + "' (synth, idx, csv)");
}

}  // namespace

std::vector<LrStep> default_schedule(std::size_t epochs) {
    const auto at = [&](double fraction) {
        return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(epochs)));
    };
    std::vector<LrStep> out;
    for (double fraction : {0.6, 0.8}) {
        const std::size_t epoch = at(fraction);
        if (epoch == 0 || epoch >= epochs) continue;
        if (!out.empty() && out.back().epoch >= epoch) continue;
        out.push_back({epoch, 0.2});
    }
    return out;
}

void RunConfig::set(const std::string& raw_key, const std::string& value) {
    const std::string key = trim(raw_key);
    const std::string text = trim(value);
    // data
    if (key == "data.source") data.source = parse_source(text);
    else if (key == "data.label_count") data.label_count = parse_value<std::size_t>(key, text);
    else if (key == "data.per_class") data.per_class = parse_value<std::size_t>(key, text);
    else if (key == "data.test_per_class") data.test_per_class = parse_value<std::size_t>(key, text);
    else if (key == "data.dim") data.dim = parse_value<std::size_t>(key, text);
    else if (key == "data.spread") data.spread = parse_value<double>(key, text);
    else if (key == "data.seed") data.seed = parse_value<std::uint64_t>(key, text);
    else if (key == "data.train_images") data.train_images = text;
    else if (key == "data.train_labels") data.train_labels = text;
    else if (key == "data.test_images") data.test_images = text;
    else if (key == "data.test_labels") data.test_labels = text;
    else if (key == "data.train_csv") data.train_csv = text;
    else if (key == "data.test_csv") data.test_csv = text;
    else if (key == "data.subset") data.subset = parse_value<std::size_t>(key, text);
    // network
    else if (key == "network.hidden") hidden_layers = parse_list<std::size_t>(key, text);
    else if (key == "network.activation") activation = parse_activation(text);
    // optimizer
    else if (key == "optimizer.kind") optimizer.kind = parse_optimizer(text);
    else if (key == "optimizer.lr") optimizer.learning_rate = parse_value<double>(key, text);
    else if (key == "optimizer.momentum") optimizer.momentum = parse_value<double>(key, text);
    else if (key == "optimizer.beta1") optimizer.adam_beta1 = parse_value<double>(key, text);
    else if (key == "optimizer.beta2") optimizer.adam_beta2 = parse_value<double>(key, text);
    else if (key == "optimizer.l2") optimizer.l2_scale = parse_value<double>(key, text);
    else if (key == "optimizer.batch_size") optimizer.batch_size = parse_value<std::size_t>(key, text);
    else if (key == "optimizer.schedule") {
        if (text == "auto") lr_schedule.reset();
        else lr_schedule = parse_schedule(key, text);
    }
    // run
    else if (key == "run.epochs") epochs = parse_value<std::size_t>(key, text);
    else if (key == "run.seed") seed = parse_value<std::uint64_t>(key, text);
    else if (key == "run.out") out_dir = text;
    else if (key == "run.model") model_path = text;
    // loss
    else if (key == "loss.kind") loss.kind = text;
    else if (key == "loss.beta") loss.beta = parse_value<double>(key, text);
    else if (key == "loss.k") {
        if (text == "auto") loss.k.reset();
        else loss.k = parse_value<double>(key, text);
    }
    else if (key == "loss.gamma") loss.gamma = parse_value<double>(key, text);
    else if (key == "loss.epsilon") loss.epsilon = parse_value<double>(key, text);
    else if (key == "loss.warmup") loss.warmup_epochs = parse_value<std::size_t>(key, text);
    else if (key == "loss.transition") loss.transition = parse_transition_source(text);
    else if (key == "loss.transition_file") loss.transition_file = text;
    // noise
    else if (key == "noise.kind") noise.kind = parse_noise_kind(text);
    else if (key == "noise.rate") noise.rate = parse_value<double>(key, text);
    else if (key == "noise.seed") noise.seed = parse_value<std::uint64_t>(key, text);
    else if (key == "noise.sidecar") noise.sidecar = text;
    else if (key == "noise.baseline_on_noisy") noise.baseline_on_noisy = parse_bool(key, text);
    // sweep
    else if (key == "sweep.rates") sweep.rates = parse_list<double>(key, text);
    else if (key == "sweep.seeds") sweep.seeds = parse_list<std::uint64_t>(key, text);
    else if (key == "sweep.losses") sweep.losses = split_list(text);
    else if (key == "sweep.partial_mean") sweep.partial_mean = parse_bool(key, text);
    // oracle
    else if (key == "oracle.trials") oracle_trials = parse_value<std::size_t>(key, text);
    else if (key == "oracle.seed") oracle_seed = parse_value<std::uint64_t>(key, text);
    else throw ConfigError("unknown configuration key '" + key + "'");
}

void RunConfig::load_file(const std::filesystem::path& path) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::read_ini(path.string(), tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError("cannot parse config " + path.string() + ": " + e.what());
    }
    for (const auto& [section, entries] : tree) {
        if (entries.empty()) throw ConfigError("config entry '" + section + "' must live inside a [section]");
        for (const auto& [key, node] : entries) set(section + "." + key, node.data());
    }
}

std::vector<LrStep> RunConfig::effective_schedule() const {
    return lr_schedule ? *lr_schedule : default_schedule(epochs);
}

TrainingOptions RunConfig::training_options() const {
    TrainingOptions options;
    options.hidden_layers = hidden_layers;
    options.activation = activation;
    options.optimizer = optimizer;
    options.optimizer.lr_schedule = effective_schedule();
    options.epochs = epochs;
    options.seed = seed;
    options.estimator.gamma = loss.gamma;
    options.estimator.epsilon = loss.epsilon;
    options.estimator.warmup_epochs = loss.warmup_epochs;
    return options;
}

}  // namespace skeptic

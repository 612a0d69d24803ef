#include <doctest.h>

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "skeptic/commands.hpp"
#include "skeptic/data_io.hpp"
#include "support.hpp"

using namespace skeptic;

namespace {

struct CliRun {
    int code = -1;
    std::string out;
    std::string err;
};

CliRun run(std::vector<std::string> args) {
    args.insert(args.begin(), "skeptic");
    std::vector<const char*> argv;
    for (const std::string& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    CliRun r;
    r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> lines_of(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    return lines;
}

// Small synthetic problem shared by the end-to-end cases.
std::vector<std::string> small_data() {
    return {"--set", "data.label_count=3", "--set", "data.per_class=20", "--set", "data.test_per_class=10",
            "--set", "data.dim=4",         "--set", "data.spread=0.2",   "--set", "network.hidden=8",
            "--set", "optimizer.lr=0.01",  "--set", "optimizer.batch_size=16"};
}

std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail) {
    head.insert(head.end(), tail.begin(), tail.end());
    return head;
}

// Five samples whose one-hot features make a scaled identity network
// predict `shown`.
void write_fixture(const test::TempDir& dir, const std::vector<Label>& shown, const std::vector<Label>& truth) {
    std::ofstream csv(dir / "data.csv");
    csv << "label,f0,f1,f2\n";
    for (std::size_t i = 0; i < shown.size(); ++i) {
        csv << truth[i];
        for (Label c = 0; c < 3; ++c) csv << ',' << (c == shown[i] ? 1 : 0);
        csv << '\n';
    }
    NetworkState model = init_network(NetworkSpec{{3, 3}, Activation::relu, 1});
    for (std::size_t r = 0; r < 3; ++r) {
        model.params.layers[0].biases[r] = 0.0;
        for (std::size_t c = 0; c < 3; ++c) model.params.layers[0].weights(r, c) = r == c ? 10.0 : 0.0;
    }
    save_model(model, dir / "model.json");
}

}  // namespace

TEST_CASE("help and usage errors") {
    CHECK(run({"--help"}).code == kExitSuccess);
    CHECK(run({"train", "--help"}).code == kExitSuccess);
    CHECK(run({}).code == kExitValidation);
    CHECK(run({"launch"}).code == kExitValidation);
    CHECK(run({"train", "--bogus", "1"}).code == kExitValidation);
    CHECK(run({"train", "--set", "nonsense"}).code == kExitValidation);
    CHECK(run({"train", "--set", "loss.kind=hinge", "--epochs", "1"}).code == kExitValidation);
}

TEST_CASE("gen-noise writes a sidecar with the forced rate") {
    test::TempDir dir("cli_gen");
    const auto r = run(with({"gen-noise", "--kind", "symmetric", "--rate", "0.4", "--seed", "1", "--out",
                             dir.path().string()},
                            small_data()));
    REQUIRE(r.code == kExitSuccess);
    CHECK(r.out.find("measured_rate=0.4") != std::string::npos);
    const SidecarFile s = read_sidecar(dir / "sidecar.csv");
    CHECK(sidecar_noise_rate(s) == 0.4);
    CHECK(s.rate == 0.4);
    CHECK(s.rows.size() == 60);

    const auto bad = run(with({"gen-noise", "--rate", "0.6", "--out", dir.path().string()}, small_data()));
    CHECK(bad.code == kExitValidation);
    CHECK(bad.err.find("0.5") != std::string::npos);
}

TEST_CASE("five seeds give five sidecars over the same clean data") {
    test::TempDir dir("cli_seeds");
    std::vector<SidecarFile> files;
    for (int seed = 1; seed <= 5; ++seed) {
        const auto path = (dir / ("s" + std::to_string(seed) + ".csv")).string();
        REQUIRE(run(with({"gen-noise", "--rate", "0.3", "--seed", std::to_string(seed), "--sidecar", path},
                         small_data()))
                    .code == kExitSuccess);
        files.push_back(read_sidecar(path));
    }
    for (std::size_t a = 0; a < files.size(); ++a)
        for (std::size_t b = a + 1; b < files.size(); ++b) {
            CHECK_FALSE(files[a].rows == files[b].rows);
            for (std::size_t i = 0; i < files[a].rows.size(); ++i)
                CHECK(files[a].rows[i].true_label == files[b].rows[i].true_label);
        }
}

TEST_CASE("confusing gen-noise trains a baseline first") {
    test::TempDir dir("cli_conf");
    const auto r = run(with({"gen-noise", "--kind", "confusing", "--rate", "0.2", "--epochs", "3", "--out",
                             dir.path().string()},
                            small_data()));
    REQUIRE(r.code == kExitSuccess);
    const SidecarFile s = read_sidecar(dir / "sidecar.csv");
    CHECK(s.kind == NoiseKind::confusing);
    CHECK(sidecar_noise_rate(s) == 0.2);
}

TEST_CASE("train writes results, log, transition and checkpoint") {
    test::TempDir dir("cli_train");
    const std::string sidecar = (dir / "side.csv").string();
    REQUIRE(run(with({"gen-noise", "--rate", "0.2", "--sidecar", sidecar}, small_data())).code == kExitSuccess);
    const std::string out = (dir / "run").string();
    const auto r = run(with({"train", "--loss", "skeptical", "--epochs", "4", "--sidecar", sidecar, "--out", out},
                            small_data()));
    REQUIRE(r.code == kExitSuccess);

    const auto j = nlohmann::json::parse(read_file(dir / "run" / "result.json"));
    for (const char* key : {"test_error", "train_error_vs_true", "noise_rate", "recovery_precision",
                            "recovery_recall", "per_epoch", "loss", "transition_source", "seed", "epochs"})
        CHECK_MESSAGE(j.contains(key), key);
    CHECK(j["loss"] == "skeptical");
    CHECK(j["transition_source"] == "estimate");
    CHECK(j["noise_rate"].get<double>() == doctest::Approx(0.2));
    CHECK(j["per_epoch"].size() == 4);
    CHECK(j["test_error"].is_number());
    CHECK(lines_of(dir / "run" / "epochs.csv").size() == 5);
    CHECK(std::filesystem::exists(dir / "run" / "transition.txt"));
    CHECK(std::filesystem::exists(dir / "run" / "model.json"));
    const NetworkState model = load_model(dir / "run" / "model.json");
    CHECK(model.spec.layer_sizes == std::vector<std::size_t>{4, 8, 3});
}

TEST_CASE("clean train has explicit nulls for recovery") {
    test::TempDir dir("cli_clean");
    const auto r = run(with({"train", "--loss", "log", "--epochs", "20", "--out", dir.path().string()}, small_data()));
    REQUIRE(r.code == kExitSuccess);
    const auto j = nlohmann::json::parse(read_file(dir / "result.json"));
    CHECK(j["recovery_precision"].is_null());
    CHECK(j["recovery_recall"].is_null());
    CHECK(j["transition_source"].is_null());
    CHECK(j["test_error"].get<double>() < 0.05);
    CHECK_FALSE(std::filesystem::exists(dir / "transition.txt"));
}

TEST_CASE("train is byte-for-byte reproducible") {
    test::TempDir dir("cli_repro");
    const std::string sidecar = (dir / "side.csv").string();
    REQUIRE(run(with({"gen-noise", "--rate", "0.3", "--sidecar", sidecar}, small_data())).code == kExitSuccess);
    for (const char* loss : {"log", "forward", "skeptical"}) {
        const auto a = (dir / (std::string(loss) + "_a")).string();
        const auto b = (dir / (std::string(loss) + "_b")).string();
        REQUIRE(run(with({"train", "--loss", loss, "--epochs", "3", "--sidecar", sidecar, "--out", a}, small_data()))
                    .code == kExitSuccess);
        REQUIRE(run(with({"train", "--loss", loss, "--epochs", "3", "--sidecar", sidecar, "--out", b}, small_data()))
                    .code == kExitSuccess);
        CHECK(read_file(std::filesystem::path(a) / "result.json") == read_file(std::filesystem::path(b) / "result.json"));
        CHECK(read_file(std::filesystem::path(a) / "model.json") == read_file(std::filesystem::path(b) / "model.json"));
    }
}

TEST_CASE("frozen estimator through the command line") {
    test::TempDir dir("cli_gamma");
    const std::string sidecar = (dir / "side.csv").string();
    REQUIRE(run(with({"gen-noise", "--rate", "0.3", "--sidecar", sidecar}, small_data())).code == kExitSuccess);
    REQUIRE(run(with({"train", "--loss", "skeptical", "--gamma", "1", "--epochs", "5", "--sidecar", sidecar, "--out",
                      dir.path().string()},
                     small_data()))
                .code == kExitSuccess);
    CHECK(read_transition(dir / "transition.txt") == TransitionMatrix::identity(3));
}

TEST_CASE("transition file injection") {
    test::TempDir dir("cli_tfile");
    const std::string sidecar = (dir / "side.csv").string();
    REQUIRE(run(with({"gen-noise", "--rate", "0.3", "--sidecar", sidecar}, small_data())).code == kExitSuccess);
    Matrix m(3, 3, 0.15);
    for (std::size_t i = 0; i < 3; ++i) m(i, i) = 0.7;
    write_transition(TransitionMatrix(m), dir / "t.txt");
    const auto r = run(with({"train", "--loss", "forward", "--transition-file", (dir / "t.txt").string(), "--epochs",
                             "2", "--sidecar", sidecar, "--out", dir.path().string()},
                            small_data()));
    REQUIRE(r.code == kExitSuccess);
    CHECK(read_transition(dir / "transition.txt") == TransitionMatrix(m));

    write_transition(TransitionMatrix::identity(4), dir / "t4.txt");
    CHECK(run(with({"train", "--loss", "forward", "--transition-file", (dir / "t4.txt").string(), "--epochs", "1",
                    "--sidecar", sidecar, "--out", dir.path().string()},
                   small_data()))
              .code == kExitValidation);
    CHECK(run(with({"train", "--loss", "backward", "--transition", "estimate", "--epochs", "1", "--sidecar", sidecar,
                    "--out", dir.path().string()},
                   small_data()))
              .code == kExitValidation);
}

TEST_CASE("sidecar label count must match the dataset") {
    test::TempDir dir("cli_mismatch");
    std::ofstream(dir / "side.csv") << "# labels=4\n# kind=symmetric\n# rate=0\n# seed=1\n0,0,0\n";
    const auto r = run(with({"train", "--epochs", "1", "--sidecar", (dir / "side.csv").string(), "--out",
                             dir.path().string()},
                            small_data()));
    CHECK(r.code == kExitValidation);
}

TEST_CASE("numeric failure exit code") {
    test::TempDir dir("cli_nan");
    const auto r = run(with({"train", "--loss", "unhinged", "--epochs", "50", "--out", dir.path().string()},
                            with(small_data(), {"--set", "optimizer.kind=sgd", "--set", "optimizer.lr=1e300"})));
    CHECK(r.code == kExitNumeric);
    CHECK(r.err.find("epoch") != std::string::npos);
}

TEST_CASE("evaluate on the five-sample fixture") {
    test::TempDir dir("cli_eval");
    write_fixture(dir, {0, 1, 1, 0, 1}, {0, 1, 2, 0, 1});
    std::ofstream(dir / "side.csv") << "# labels=3\n# kind=symmetric\n# rate=0.4\n# seed=1\n"
                                    << "index,noisy_label,true_label\n0,0,0\n1,2,1\n2,2,2\n3,1,0\n4,1,1\n";
    const auto r = run({"evaluate", "--set", "data.source=csv", "--set", "data.train_csv=" + (dir / "data.csv").string(),
                        "--set", "data.label_count=3", "--model", (dir / "model.json").string(), "--sidecar",
                        (dir / "side.csv").string(), "--out", (dir / "eval").string()});
    REQUIRE(r.code == kExitSuccess);
    const auto j = nlohmann::json::parse(read_file(dir / "eval" / "result.json"));
    CHECK(j["recovery_precision"].get<double>() == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(j["recovery_recall"].get<double>() == 1.0);
    CHECK(j["noise_rate"].get<double>() == doctest::Approx(0.4));
    CHECK(j["test_error"].is_null());
}

TEST_CASE("evaluate a perfect model on clean data") {
    test::TempDir dir("cli_perfect");
    write_fixture(dir, {0, 1, 2, 0, 1}, {0, 1, 2, 0, 1});
    const std::string csv = (dir / "data.csv").string();
    const auto r = run({"evaluate", "--set", "data.source=csv", "--set", "data.train_csv=" + csv, "--set",
                        "data.test_csv=" + csv, "--set", "data.label_count=3", "--model",
                        (dir / "model.json").string(), "--out", dir.path().string()});
    REQUIRE(r.code == kExitSuccess);
    CHECK(r.out.find("warning") != std::string::npos);
    const auto j = nlohmann::json::parse(read_file(dir / "result.json"));
    CHECK(j["test_error"].get<double>() == 0.0);
    CHECK(j["train_error_vs_true"].get<double>() == 0.0);
    CHECK(j["recovery_precision"].is_null());
    CHECK(j["recovery_recall"].is_null());

    CHECK(run({"evaluate", "--model", (dir / "absent.json").string(), "--out", dir.path().string()}).code ==
          kExitValidation);
}

TEST_CASE("verify-oracle") {
    const auto a = run({"verify-oracle"});
    CHECK(a.code == kExitSuccess);
    CHECK(a.out.find("oracle: PASS") != std::string::npos);
    CHECK(run({"verify-oracle"}).out == a.out);
    CHECK(run({"verify-oracle", "--seed", "2"}).out != a.out);
    const auto zero = run({"verify-oracle", "--trials", "0"});
    CHECK(zero.code == kExitSuccess);
    CHECK(zero.out.find("warning") != std::string::npos);
}

TEST_CASE("sweep grid and aggregation") {
    test::TempDir dir("cli_sweep");
    const auto grid = run(with({"sweep", "--rates", "0.1,0.2,0.3,0.4", "--seeds", "1,2,3", "--losses",
                                "log,forward:empirical", "--epochs", "1", "--out", dir.path().string()},
                               small_data()));
    REQUIRE(grid.code == kExitSuccess);
    const auto rows = lines_of(dir / "sweep.csv");
    CHECK(rows.front() == "loss,kind,rate,test_err,train_err,precision,recall");
    CHECK(rows.size() == 9);

    const auto single = run(with({"sweep", "--rates", "0.3", "--seeds", "1,2,3,4,5", "--losses", "log", "--epochs",
                                  "2", "--out", dir.path().string()},
                                 small_data()));
    REQUIRE(single.code == kExitSuccess);
    const auto agg = lines_of(dir / "sweep.csv");
    REQUIRE(agg.size() == 2);

    // Recompute the middle-three mean of test_err from the per-seed file.
    std::vector<double> errs;
    for (const std::string& line : lines_of(dir / "sweep_runs.csv")) {
        if (line.rfind("loss,", 0) == 0) continue;
        std::stringstream ss(line);
        std::string field;
        for (int i = 0; i < 5; ++i) std::getline(ss, field, ',');
        errs.push_back(std::stod(field));
    }
    REQUIRE(errs.size() == 5);
    std::sort(errs.begin(), errs.end());
    const double expected = (errs[1] + errs[2] + errs[3]) / 3.0;
    std::stringstream ss(agg[1]);
    std::string field;
    for (int i = 0; i < 4; ++i) std::getline(ss, field, ',');
    CHECK(std::stod(field) == doctest::Approx(expected).epsilon(1e-12));

    CHECK(run(with({"sweep", "--seeds", "1,2", "--epochs", "1", "--out", dir.path().string()}, small_data())).code ==
          kExitValidation);
    CHECK(run(with({"sweep", "--rates", "0.6", "--epochs", "1", "--out", dir.path().string()}, small_data())).code ==
          kExitValidation);
}

TEST_CASE("flags override the config file") {
    test::TempDir dir("cli_flags");
    std::ofstream(dir / "c.ini") << "[run]\nepochs = 7\n[loss]\nkind = forward\n";
    const auto r = run(with({"train", "--config", (dir / "c.ini").string(), "--epochs", "2", "--out",
                             dir.path().string()},
                            small_data()));
    REQUIRE(r.code == kExitSuccess);
    const auto j = nlohmann::json::parse(read_file(dir / "result.json"));
    CHECK(j["epochs"] == 2);
    CHECK(j["loss"] == "forward");
    CHECK(j["per_epoch"].size() == 2);
}

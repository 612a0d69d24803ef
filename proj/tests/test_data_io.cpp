#include <doctest.h>

#include <fstream>
#include <iterator>

#include "skeptic/data_io.hpp"
#include "skeptic/error.hpp"
#include "skeptic/noise.hpp"
#include "support.hpp"

using namespace skeptic;

namespace {

std::vector<std::uint8_t> slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_text(const std::filesystem::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

LabeledDataset five_samples() {
    LabeledDataset d;
    d.label_count = 3;
    d.features = Matrix(5, 2);
    for (std::size_t i = 0; i < 10; ++i) d.features.data[i] = static_cast<double>(i);
    d.labels = {0, 1, 2, 0, 1};
    return d;
}

const char* kSidecarHeader = "# labels=3\n# kind=symmetric\n# rate=0.4\n# seed=1\n";

}  // namespace

TEST_CASE("IDX round trip and scaling") {
    test::TempDir dir("idx");
    const std::vector<std::vector<std::uint8_t>> images{{0, 255, 128, 1, 2, 3}, {255, 255, 0, 0, 10, 20}};
    write_idx_images(dir / "img", 2, 3, images);
    write_idx_labels(dir / "lbl", {7, 3});
    const LabeledDataset d = load_idx(dir / "img", dir / "lbl");
    CHECK(d.size() == 2);
    CHECK(d.dim() == 6);
    CHECK(d.label_count == 8);
    CHECK(d.labels == std::vector<Label>{7, 3});
    CHECK(d.features(0, 0) == 0.0);
    CHECK(d.features(0, 1) == 1.0);
    CHECK(d.features(0, 2) == doctest::Approx(128.0 / 255.0));
    CHECK(load_idx(dir / "img", dir / "lbl", 10).label_count == 10);
    CHECK_THROWS_AS(load_idx(dir / "img", dir / "lbl", 5), IndexError);
}

TEST_CASE("IDX rejects every truncation") {
    test::TempDir dir("idx_trunc");
    write_idx_images(dir / "img", 3, 2, {{1, 2, 3, 4, 5, 6}, {7, 8, 9, 10, 11, 12}});
    write_idx_labels(dir / "lbl", {0, 1});
    const auto images = slurp(dir / "img");
    const auto labels = slurp(dir / "lbl");
    for (std::size_t cut = 0; cut < images.size(); ++cut) {
        dump(dir / "img_cut", std::vector<std::uint8_t>(images.begin(), images.begin() + static_cast<long>(cut)));
        CHECK_THROWS_AS(load_idx(dir / "img_cut", dir / "lbl"), FormatError);
    }
    for (std::size_t cut = 0; cut < labels.size(); ++cut) {
        dump(dir / "lbl_cut", std::vector<std::uint8_t>(labels.begin(), labels.begin() + static_cast<long>(cut)));
        CHECK_THROWS_AS(load_idx(dir / "img", dir / "lbl_cut"), FormatError);
    }
}

TEST_CASE("IDX header errors name byte offsets") {
    test::TempDir dir("idx_bad");
    write_idx_images(dir / "img", 1, 1, {{9}});
    write_idx_labels(dir / "lbl", {1});
    auto bad_magic = slurp(dir / "img");
    bad_magic[3] = 0x01;
    dump(dir / "magic", bad_magic);
    try {
        load_idx(dir / "magic", dir / "lbl");
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("byte offset 0") != std::string::npos);
    }
    write_idx_labels(dir / "two", {1, 0});
    try {
        load_idx(dir / "img", dir / "two");
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("count mismatch") != std::string::npos);
    }
    auto trailing = slurp(dir / "img");
    trailing.push_back(0);
    dump(dir / "trail", trailing);
    CHECK_THROWS_AS(load_idx(dir / "trail", dir / "lbl"), FormatError);

    // A huge declared count must not overflow the size check.
    auto huge = slurp(dir / "img");
    for (std::size_t i = 4; i < 16; ++i) huge[i] = 0xff;
    dump(dir / "huge", huge);
    CHECK_THROWS_AS(load_idx(dir / "huge", dir / "lbl"), FormatError);

    dump(dir / "empty", {});
    CHECK_THROWS_AS(load_idx(dir / "empty", dir / "lbl"), FormatError);
    CHECK_THROWS_AS(load_idx(dir / "missing", dir / "lbl"), FormatError);
}

TEST_CASE("CSV loading") {
    test::TempDir dir("csv");
    write_text(dir / "a.csv", "label,x,y\n0,0.5,1\n2,1.5,-2\n");
    const LabeledDataset d = load_csv(dir / "a.csv");
    CHECK(d.size() == 2);
    CHECK(d.dim() == 2);
    CHECK(d.label_count == 3);
    CHECK(d.features(1, 1) == -2.0);

    write_text(dir / "noheader.csv", "1,0.5\n0,0.25\n");
    CHECK(load_csv(dir / "noheader.csv").size() == 2);
    write_text(dir / "ragged.csv", "0,1,2\n1,3\n");
    CHECK_THROWS_AS(load_csv(dir / "ragged.csv"), FormatError);
    write_text(dir / "bad.csv", "0,1\nx,2\n");
    CHECK_THROWS_AS(load_csv(dir / "bad.csv"), FormatError);
    write_text(dir / "feat.csv", "0,1\n1,abc\n");
    CHECK_THROWS_AS(load_csv(dir / "feat.csv"), FormatError);
    write_text(dir / "empty.csv", "");
    CHECK_THROWS_AS(load_csv(dir / "empty.csv"), FormatError);
}

TEST_CASE("synthetic clusters") {
    const LabeledDataset a = synth_clusters(4, 25, 6, 0.3, 11);
    CHECK(a.size() == 100);
    CHECK(a.dim() == 6);
    std::vector<int> histogram(4, 0);
    for (Label l : a.labels) ++histogram[static_cast<std::size_t>(l)];
    for (int h : histogram) CHECK(h == 25);
    const LabeledDataset b = synth_clusters(4, 25, 6, 0.3, 11);
    CHECK(a.features == b.features);
    CHECK(a.labels == b.labels);
    CHECK_FALSE(synth_clusters(4, 25, 6, 0.3, 12).features == a.features);

    // Zero spread puts every sample on its (distinct) class center.
    const LabeledDataset tight = synth_clusters(5, 10, 3, 0.0, 2);
    for (std::size_t i = 0; i < tight.size(); ++i) {
        const std::size_t same = i % 5;
        for (std::size_t d = 0; d < 3; ++d) CHECK(tight.features(i, d) == tight.features(same, d));
    }
    for (std::size_t c = 1; c < 5; ++c) CHECK_FALSE(std::equal(tight.sample(c).begin(), tight.sample(c).end(),
                                                               tight.sample(0).begin()));

    CHECK_THROWS_AS(synth_clusters(1, 10, 3, 0.1, 1), ConfigError);
    CHECK_THROWS_AS(synth_clusters(3, 0, 3, 0.1, 1), ConfigError);
    CHECK_THROWS_AS(synth_clusters(3, 10, 0, 0.1, 1), ConfigError);
    CHECK_THROWS_AS(synth_clusters(3, 10, 3, -1.0, 1), ConfigError);
}

TEST_CASE("sidecar round trip") {
    test::TempDir dir("sidecar");
    LabeledDataset noisy = five_samples();
    noisy.true_labels = noisy.labels;
    noisy.labels = {0, 2, 2, 1, 1};
    const SidecarFile sidecar = make_sidecar(noisy, {NoiseKind::symmetric, 0.4, 1});
    write_sidecar(sidecar, dir / "s.csv");
    const SidecarFile back = read_sidecar(dir / "s.csv", 5);
    CHECK(back == sidecar);
    const LabeledDataset applied = apply_sidecar(five_samples(), back);
    CHECK(applied.labels == noisy.labels);
    CHECK(*applied.true_labels == five_samples().labels);
    CHECK(back.rate == sidecar_noise_rate(back));
    CHECK(back.rate == 0.4);
}

TEST_CASE("sidecar header rate equals the body's measured rate") {
    test::TempDir dir("sidecar_rate");
    const LabeledDataset clean = synth_clusters(3, 11, 2, 0.5, 1);
    for (double rate : {0.1, 0.25, 0.3, 0.45}) {
        const LabeledDataset noisy = symmetric_noise(clean, {NoiseKind::symmetric, rate, 4});
        write_sidecar(make_sidecar(noisy, {NoiseKind::symmetric, rate, 4}), dir / "s.csv");
        const SidecarFile back = read_sidecar(dir / "s.csv");
        CHECK(back.rate == sidecar_noise_rate(back));
        CHECK(back.rate == noise_rate(noisy));
    }
}

TEST_CASE("sidecar format errors carry line numbers") {
    test::TempDir dir("sidecar_bad");
    const auto expect_line = [&](const std::string& body, const std::string& line) {
        write_text(dir / "s.csv", body);
        try {
            read_sidecar(dir / "s.csv", 5);
            FAIL("expected FormatError for " << body);
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find(":" + line + ":") != std::string::npos);
        }
    };
    const std::string h = kSidecarHeader;
    expect_line(h + "index,noisy_label,true_label\n0,0,0\n0,1,0\n", "7");
    expect_line(h + "0,0,0\n9,1,0\n", "6");
    expect_line(h + "0,3,0\n", "5");
    expect_line(h + "0,1\n", "5");
    expect_line(h + "a,1,0\n", "5");
    expect_line("# labels=3\n0,0,0\n", "2");
    expect_line("# labels=3\n# kind=pairflip\n", "2");
    expect_line("# labels=3\n# colour=red\n", "2");
    CHECK_THROWS_AS(read_sidecar(dir / "nope.csv"), FormatError);
}

TEST_CASE("sidecar tolerates a missing column header") {
    test::TempDir dir("sidecar_nohdr");
    write_text(dir / "s.csv", std::string(kSidecarHeader) + "0,0,0\n1,2,1\n");
    const SidecarFile s = read_sidecar(dir / "s.csv");
    CHECK(s.rows.size() == 2);
    CHECK(sidecar_noise_rate(s) == 0.5);
}

TEST_CASE("applying a sidecar audits consistency") {
    SidecarFile s;
    s.label_count = 4;
    s.rows = {{0, 1, 0}};
    CHECK_THROWS_AS(apply_sidecar(five_samples(), s), AuditError);
    s.label_count = 3;
    s.rows = {{0, 1, 2}};
    CHECK_THROWS_AS(apply_sidecar(five_samples(), s), AuditError);
    s.rows = {{7, 1, 0}};
    CHECK_THROWS_AS(apply_sidecar(five_samples(), s), AuditError);
    LabeledDataset no_truth = five_samples();
    CHECK_THROWS_AS(make_sidecar(no_truth, {}), AuditError);
}

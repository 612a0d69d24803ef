#include "skeptic/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include "skeptic/error.hpp"
#include "skeptic/random.hpp"

namespace skeptic {

namespace {

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset, const std::filesystem::path& path) {
    if (offset + 4 > bytes.size())
        throw FormatError(path.string() + ": truncated header at byte offset " + std::to_string(offset));
    return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
           (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void write_be32(std::ofstream& out, std::uint32_t value) {
    const char buf[4] = {static_cast<char>(value >> 24), static_cast<char>(value >> 16), static_cast<char>(value >> 8),
                         static_cast<char>(value)};
    out.write(buf, 4);
}

void expect_size(const std::vector<std::uint8_t>& bytes, std::size_t expected, const std::filesystem::path& path) {
    if (bytes.size() < expected)
        throw FormatError(path.string() + ": truncated payload, data ends at byte offset " +
                          std::to_string(bytes.size()) + " but " + std::to_string(expected) + " bytes are required");
    if (bytes.size() > expected)
        throw FormatError(path.string() + ": unexpected trailing data at byte offset " + std::to_string(expected));
}

std::string format_double(double value) {
    char buf[64];
    const auto result = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, result.ptr);
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
    if (text.empty()) return false;
    const auto result = std::from_chars(text.data(), text.data() + text.size(), out);
    return result.ec == std::errc() && result.ptr == text.data() + text.size();
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        parts.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

std::size_t resolve_label_count(const std::vector<Label>& labels, std::optional<std::size_t> label_count) {
    if (label_count) return *label_count;
    Label top = 0;
    for (Label l : labels) top = std::max(top, l);
    return std::max<std::size_t>(2, static_cast<std::size_t>(top) + 1);
}

}  // namespace

LabeledDataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                        std::optional<std::size_t> label_count) {
    const std::vector<std::uint8_t> images = read_bytes(images_path);
    const std::vector<std::uint8_t> labels = read_bytes(labels_path);

    if (read_be32(images, 0, images_path) != kIdxImageMagic)
        throw FormatError(images_path.string() + ": bad image magic at byte offset 0");
    const std::size_t count = read_be32(images, 4, images_path);
    const std::size_t rows = read_be32(images, 8, images_path);
    const std::size_t cols = read_be32(images, 12, images_path);
    // Division keeps corrupt headers from overflowing the size product.
    const std::size_t payload = images.size() < 16 ? 0 : images.size() - 16;
    if (images.size() < 16 || (rows * cols != 0 && count > payload / (rows * cols)))
        throw FormatError(images_path.string() + ": truncated payload, data ends at byte offset " +
                          std::to_string(images.size()));
    expect_size(images, 16 + count * rows * cols, images_path);

    if (read_be32(labels, 0, labels_path) != kIdxLabelMagic)
        throw FormatError(labels_path.string() + ": bad label magic at byte offset 0");
    const std::size_t label_items = read_be32(labels, 4, labels_path);
    expect_size(labels, 8 + label_items, labels_path);
    if (label_items != count)
        throw FormatError("count mismatch: " + std::to_string(count) + " images (byte offset 4 of " +
                          images_path.string() + ") vs " + std::to_string(label_items) + " labels");

    LabeledDataset out;
    const std::size_t dim = rows * cols;
    out.features = Matrix(count, dim);
    for (std::size_t i = 0; i < count * dim; ++i) out.features.data[i] = images[16 + i] / 255.0;
    out.labels.resize(count);
    for (std::size_t i = 0; i < count; ++i) out.labels[i] = labels[8 + i];
    out.label_count = resolve_label_count(out.labels, label_count);
    out.validate();
    return out;
}

void write_idx_images(const std::filesystem::path& path, std::size_t rows, std::size_t cols,
                      const std::vector<std::vector<std::uint8_t>>& images) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    write_be32(out, kIdxImageMagic);
    write_be32(out, static_cast<std::uint32_t>(images.size()));
    write_be32(out, static_cast<std::uint32_t>(rows));
    write_be32(out, static_cast<std::uint32_t>(cols));
    for (const auto& image : images) {
        if (image.size() != rows * cols) throw ShapeError("image size differs from rows * cols");
        out.write(reinterpret_cast<const char*>(image.data()), static_cast<std::streamsize>(image.size()));
    }
}

void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    write_be32(out, kIdxLabelMagic);
    write_be32(out, static_cast<std::uint32_t>(labels.size()));
    out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

LabeledDataset load_csv(const std::filesystem::path& path, std::optional<std::size_t> label_count) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    std::vector<double> values;
    std::vector<Label> labels;
    std::size_t dim = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split(line, ',');
        Label label = 0;
        if (!parse_number(fields[0], label)) {
            if (line_no == 1) continue;  // header
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": bad label field");
        }
        if (labels.empty()) dim = fields.size() - 1;
        if (fields.size() - 1 != dim || dim == 0)
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(dim) +
                              " feature columns");
        for (std::size_t c = 1; c < fields.size(); ++c) {
            double v = 0.0;
            if (!parse_number(fields[c], v))
                throw FormatError(path.string() + ":" + std::to_string(line_no) + ": bad feature in column " +
                                  std::to_string(c + 1));
            values.push_back(v);
        }
        labels.push_back(label);
    }
    if (labels.empty()) throw FormatError(path.string() + ": no samples");
    LabeledDataset out;
    out.features.rows = labels.size();
    out.features.cols = dim;
    out.features.data = std::move(values);
    out.labels = std::move(labels);
    out.label_count = resolve_label_count(out.labels, label_count);
    out.validate();
    return out;
}

LabeledDataset synth_clusters(std::size_t label_count, std::size_t per_class, std::size_t dim, double spread,
                              std::uint64_t seed) {
    if (label_count < 2) throw ConfigError("synthetic clusters need at least 2 labels");
    if (per_class == 0 || dim == 0) throw ConfigError("synthetic clusters need positive per_class and dim");
    if (!(spread >= 0.0) || !std::isfinite(spread)) throw ConfigError("spread must be non-negative");
    Rng rng(seed);

    // Unit simplex vertices on seeded coordinates when dim allows it,
    // otherwise seeded random unit directions.
    Matrix centers(label_count, dim);
    if (dim >= label_count) {
        const auto coords = rng.sample_without_replacement(dim, label_count);
        for (std::size_t c = 0; c < label_count; ++c) centers(c, coords[c]) = 1.0;
    } else {
        for (std::size_t c = 0; c < label_count; ++c) {
            double norm = 0.0;
            for (double& v : centers.row(c)) {
                v = rng.normal();
                norm += v * v;
            }
            norm = std::sqrt(norm);
            for (double& v : centers.row(c)) v /= norm;
        }
    }

    const std::size_t n = label_count * per_class;
    LabeledDataset out;
    out.label_count = label_count;
    out.features = Matrix(n, dim);
    out.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = i % label_count;
        out.labels[i] = static_cast<Label>(c);
        const auto center = centers.row(c);
        auto row = out.features.row(i);
        for (std::size_t d = 0; d < dim; ++d) row[d] = center[d] + spread * rng.normal();
    }
    return out;
}

SidecarFile make_sidecar(const LabeledDataset& noisy, const NoiseSpec& spec) {
    if (!noisy.true_labels) throw AuditError("sidecar needs a dataset with true labels");
    SidecarFile out;
    out.label_count = noisy.label_count;
    out.kind = spec.kind;
    out.rate = noise_rate(noisy);
    out.seed = spec.seed;
    out.rows.reserve(noisy.size());
    for (std::size_t i = 0; i < noisy.size(); ++i) out.rows.push_back({i, noisy.labels[i], (*noisy.true_labels)[i]});
    return out;
}

void write_sidecar(const SidecarFile& sidecar, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    out << "# labels=" << sidecar.label_count << '\n';
    out << "# kind=" << to_string(sidecar.kind) << '\n';
    out << "# rate=" << format_double(sidecar.rate) << '\n';
    out << "# seed=" << sidecar.seed << '\n';
    out << "index,noisy_label,true_label\n";
    for (const SidecarRow& row : sidecar.rows) out << row.index << ',' << row.noisy_label << ',' << row.true_label << '\n';
    if (!out) throw FormatError("failed writing " + path.string());
}

SidecarFile read_sidecar(const std::filesystem::path& path, std::optional<std::size_t> dataset_size) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open sidecar " + path.string());
    SidecarFile out;
    bool seen_labels = false, seen_kind = false, seen_rate = false, seen_seed = false;
    std::set<std::size_t> seen_indices;
    std::string line;
    std::size_t line_no = 0;
    const auto fail = [&](const std::string& what) -> FormatError {
        return FormatError(path.string() + ":" + std::to_string(line_no) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::string_view body(line);
            body.remove_prefix(1);
            while (!body.empty() && body.front() == ' ') body.remove_prefix(1);
            const std::size_t eq = body.find('=');
            if (eq == std::string_view::npos) throw fail("header line without '='");
            const std::string key(body.substr(0, eq));
            const std::string_view value = body.substr(eq + 1);
            if (key == "labels") {
                if (!parse_number(value, out.label_count) || out.label_count < 2) throw fail("bad labels header");
                seen_labels = true;
            } else if (key == "kind") {
                try {
                    out.kind = parse_noise_kind(std::string(value));
                } catch (const ConfigError&) {
                    throw fail("bad kind header");
                }
                seen_kind = true;
            } else if (key == "rate") {
                if (!parse_number(value, out.rate)) throw fail("bad rate header");
                seen_rate = true;
            } else if (key == "seed") {
                if (!parse_number(value, out.seed)) throw fail("bad seed header");
                seen_seed = true;
            } else {
                throw fail("unknown header key '" + key + "'");
            }
            continue;
        }
        if (line == "index,noisy_label,true_label") continue;
        if (!(seen_labels && seen_kind && seen_rate && seen_seed)) throw fail("data row before complete header");
        const auto fields = split(line, ',');
        if (fields.size() != 3) throw fail("expected 3 fields");
        SidecarRow row;
        if (!parse_number(fields[0], row.index) || !parse_number(fields[1], row.noisy_label) ||
            !parse_number(fields[2], row.true_label))
            throw fail("non-integer field");
        if (dataset_size && row.index >= *dataset_size)
            throw fail("index " + std::to_string(row.index) + " out of bounds for dataset of size " +
                       std::to_string(*dataset_size));
        const auto in_range = [&](Label l) { return l >= 0 && static_cast<std::size_t>(l) < out.label_count; };
        if (!in_range(row.noisy_label) || !in_range(row.true_label)) throw fail("label out of range");
        if (!seen_indices.insert(row.index).second) throw fail("duplicate index " + std::to_string(row.index));
        out.rows.push_back(row);
    }
    if (!(seen_labels && seen_kind && seen_rate && seen_seed)) {
        line_no = 0;
        throw fail("missing header fields (labels, kind, rate, seed)");
    }
    return out;
}

LabeledDataset apply_sidecar(const LabeledDataset& clean, const SidecarFile& sidecar) {
    if (sidecar.label_count != clean.label_count)
        throw AuditError("sidecar label count " + std::to_string(sidecar.label_count) + " differs from dataset's " +
                         std::to_string(clean.label_count));
    LabeledDataset out = clean;
    out.true_labels = clean.labels;
    for (const SidecarRow& row : sidecar.rows) {
        if (row.index >= clean.size()) throw AuditError("sidecar index " + std::to_string(row.index) + " out of bounds");
        if (clean.labels[row.index] != row.true_label)
            throw AuditError("sidecar true label at index " + std::to_string(row.index) +
                             " disagrees with the clean dataset");
        out.labels[row.index] = row.noisy_label;
    }
    out.validate();
    return out;
}

double sidecar_noise_rate(const SidecarFile& sidecar) {
    if (sidecar.rows.empty()) return 0.0;
    std::size_t flipped = 0;
    for (const SidecarRow& row : sidecar.rows) flipped += row.noisy_label != row.true_label ? 1 : 0;
    return static_cast<double>(flipped) / static_cast<double>(sidecar.rows.size());
}

}  // namespace skeptic

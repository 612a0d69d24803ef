#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "skeptic/dataset.hpp"
#include "skeptic/noise.hpp"

namespace skeptic {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Loads an IDX image/label pair. Pixels are scaled by 1/255 and flattened
/// row-major. When `label_count` is not given it is max(label) + 1.
LabeledDataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                        std::optional<std::size_t> label_count = std::nullopt);

/// Writes IDX files from raw bytes (used for fixtures and exports).
void write_idx_images(const std::filesystem::path& path, std::size_t rows, std::size_t cols,
                      const std::vector<std::vector<std::uint8_t>>& images);
void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels);

/// CSV with one sample per line: `label,f1,f2,...`. A first line that does
/// not start with a number is treated as a header and skipped.
LabeledDataset load_csv(const std::filesystem::path& path, std::optional<std::size_t> label_count = std::nullopt);

/// Gaussian blobs, one center per class. Sample i has label i % label_count.
LabeledDataset synth_clusters(std::size_t label_count, std::size_t per_class, std::size_t dim, double spread,
                              std::uint64_t seed);

struct SidecarRow {
    std::size_t index = 0;
    Label noisy_label = 0;
    Label true_label = 0;

    bool operator==(const SidecarRow&) const = default;
};

/// Noisy-label file that pairs with a clean dataset.
struct SidecarFile {
    std::size_t label_count = 0;
    NoiseKind kind = NoiseKind::symmetric;
    double rate = 0.0;
    std::uint64_t seed = 0;
    std::vector<SidecarRow> rows;

    bool operator==(const SidecarFile&) const = default;
};

SidecarFile make_sidecar(const LabeledDataset& noisy, const NoiseSpec& spec);

void write_sidecar(const SidecarFile& sidecar, const std::filesystem::path& path);

/// Parses and validates a sidecar. With `dataset_size`, indices must be
/// below it.
SidecarFile read_sidecar(const std::filesystem::path& path, std::optional<std::size_t> dataset_size = std::nullopt);

/// Replaces the labels of `clean` with the sidecar's noisy labels and fills
/// true_labels. Rows not listed keep their clean label.
LabeledDataset apply_sidecar(const LabeledDataset& clean, const SidecarFile& sidecar);

/// Fraction of sidecar rows whose noisy label differs from the true label.
double sidecar_noise_rate(const SidecarFile& sidecar);

}  // namespace skeptic

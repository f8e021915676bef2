#pragma once

#include "datadiet/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace datadiet {

enum class Split { train, test };

std::string to_string(Split s);

/// Fixed per-channel constants used to standardize raw [0,1] pixels. Inputs
/// are laid out channel-planar: channel c covers features
/// [c * channel_size, (c + 1) * channel_size).
struct Standardization {
    std::vector<double> mean;
    std::vector<double> stddev;
    std::size_t channel_size = 0;

    bool operator==(const Standardization&) const = default;
};

const Standardization& mnist_standardization();
const Standardization& cifar10_standardization();

struct ExampleView {
    std::size_t example_id;
    std::span<const double> x;
    std::size_t label;
};

/// Examples are stored contiguously: row i of `inputs` is example i.
struct Dataset {
    Tensor2 inputs;
    std::vector<std::size_t> ids;
    std::vector<std::size_t> labels;
    std::size_t num_classes = 0;
    Split split = Split::train;
    std::optional<Standardization> standardization;

    std::size_t size() const { return labels.size(); }
    std::size_t input_dim() const { return inputs.cols; }
    ExampleView example(std::size_t i) const { return {ids[i], inputs.row(i), labels[i]}; }

    /// Examples at the given positions, in the order given. Ids are kept.
    Dataset select(std::span<const std::size_t> positions) const;
    /// The first n examples (or all of them when n >= size()).
    Dataset head(std::size_t n) const;

    void validate() const;
    bool operator==(const Dataset&) const = default;
};

/// Reads a whole file, inflating it first if it starts with the gzip magic
/// bytes 0x1f 0x8b.
std::vector<std::uint8_t> read_maybe_gzip(const std::filesystem::path& path);

/// IDX images (magic 0x00000803) and labels (magic 0x00000801), optionally
/// gzip-compressed.
Dataset load_mnist(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                   Split split = Split::train);

/// CIFAR-10 binary batches: records of 1 label byte + 3072 channel-planar
/// pixel bytes. Ids follow the concatenated file order.
Dataset load_cifar10(std::span<const std::filesystem::path> batch_paths, Split split = Split::train);

/// Class c is Normal(3 * mu_c, I) where mu_c is a unit direction that depends
/// only on (c, dim), so datasets drawn with different seeds share class means.
Dataset synthetic_gaussian(std::size_t num_classes, std::size_t dim, std::size_t per_class, std::uint64_t seed,
                           Split split = Split::train);

enum class InputSpace { normalized, raw };

/// ||x_i||_2 for every example in dataset order. `raw` undoes the
/// standardization first; datasets without one are the same in both spaces.
std::vector<double> input_norms(const Dataset& ds, InputSpace space = InputSpace::normalized);

/// Inverse of the standardization applied by the loaders.
std::vector<double> destandardize(const Standardization& s, std::span<const double> x);

} // namespace datadiet

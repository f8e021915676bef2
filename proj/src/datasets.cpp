#include "datadiet/datasets.hpp"

#include "datadiet/error.hpp"
#include "datadiet/util.hpp"

#include <zlib.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <random>

namespace datadiet {

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
constexpr std::size_t kCifarPixels = 3072;
constexpr std::size_t kCifarRecord = kCifarPixels + 1;
constexpr double kSyntheticSeparation = 3.0;

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset) {
    return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
           (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

std::vector<std::uint8_t> inflate_gzip(const std::vector<std::uint8_t>& compressed, const std::filesystem::path& path) {
    z_stream stream{};
    if (inflateInit2(&stream, 16 + MAX_WBITS) != Z_OK) throw FormatError("zlib init failed for " + path.string());
    stream.next_in = const_cast<Bytef*>(compressed.data());
    stream.avail_in = static_cast<uInt>(compressed.size());

    std::vector<std::uint8_t> out;
    std::vector<std::uint8_t> chunk(1 << 20);
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        stream.next_out = chunk.data();
        stream.avail_out = static_cast<uInt>(chunk.size());
        rc = inflate(&stream, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&stream);
            throw FormatError("truncated or corrupt gzip stream in " + path.string());
        }
        out.insert(out.end(), chunk.data(), chunk.data() + (chunk.size() - stream.avail_out));
        if (rc == Z_OK && stream.avail_in == 0 && stream.avail_out != 0) {
            inflateEnd(&stream);
            throw FormatError("truncated gzip stream in " + path.string());
        }
    }
    inflateEnd(&stream);
    return out;
}

void standardize_in_place(std::span<double> x, const Standardization& s) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        const std::size_t c = i / s.channel_size;
        x[i] = (x[i] - s.mean[c]) / s.stddev[c];
    }
}

} // namespace

std::string to_string(Split s) { return s == Split::train ? "train" : "test"; }

const Standardization& mnist_standardization() {
    static const Standardization s{{0.1307}, {0.3081}, 784};
    return s;
}

const Standardization& cifar10_standardization() {
    static const Standardization s{{0.4914, 0.4822, 0.4465}, {0.2470, 0.2435, 0.2616}, 1024};
    return s;
}

Dataset Dataset::select(std::span<const std::size_t> positions) const {
    Dataset out;
    out.inputs = Tensor2(positions.size(), input_dim());
    out.ids.reserve(positions.size());
    out.labels.reserve(positions.size());
    for (std::size_t k = 0; k < positions.size(); ++k) {
        const std::size_t i = positions[k];
        if (i >= size()) throw DimensionError("select position out of range");
        std::copy_n(inputs.row(i).begin(), input_dim(), out.inputs.row(k).begin());
        out.ids.push_back(ids[i]);
        out.labels.push_back(labels[i]);
    }
    out.num_classes = num_classes;
    out.split = split;
    out.standardization = standardization;
    return out;
}

Dataset Dataset::head(std::size_t n) const {
    n = std::min(n, size());
    std::vector<std::size_t> positions(n);
    for (std::size_t i = 0; i < n; ++i) positions[i] = i;
    return select(positions);
}

void Dataset::validate() const {
    if (inputs.rows != labels.size() || ids.size() != labels.size()) {
        throw DimensionError("dataset inputs, ids and labels disagree in length");
    }
    for (std::size_t y : labels) {
        if (y >= num_classes) throw DimensionError("label " + std::to_string(y) + " out of range");
    }
}

std::vector<std::uint8_t> read_maybe_gzip(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) return inflate_gzip(bytes, path);
    return bytes;
}

Dataset load_mnist(const std::filesystem::path& images_path, const std::filesystem::path& labels_path, Split split) {
    const auto images = read_maybe_gzip(images_path);
    const auto labels = read_maybe_gzip(labels_path);

    if (images.size() < 16) throw FormatError("truncated IDX header in " + images_path.string());
    if (labels.size() < 8) throw FormatError("truncated IDX header in " + labels_path.string());
    if (read_be32(images, 0) != kIdxImagesMagic) throw FormatError("bad magic in " + images_path.string());
    if (read_be32(labels, 0) != kIdxLabelsMagic) throw FormatError("bad magic in " + labels_path.string());

    const std::size_t count = read_be32(images, 4);
    const std::size_t rows = read_be32(images, 8);
    const std::size_t cols = read_be32(images, 12);
    const std::size_t label_count = read_be32(labels, 4);
    if (count != label_count) {
        throw FormatError("length mismatch: " + std::to_string(count) + " images but " + std::to_string(label_count) +
                          " labels");
    }
    const std::size_t dim = rows * cols;
    if (images.size() < 16 + count * dim) throw FormatError("truncated image data in " + images_path.string());
    if (labels.size() < 8 + count) throw FormatError("truncated label data in " + labels_path.string());

    Dataset ds;
    ds.num_classes = 10;
    ds.split = split;
    ds.standardization = mnist_standardization();
    ds.standardization->channel_size = dim;
    ds.inputs = Tensor2(count, dim);
    ds.ids.resize(count);
    ds.labels.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        auto row = ds.inputs.row(i);
        const std::uint8_t* pixels = images.data() + 16 + i * dim;
        for (std::size_t k = 0; k < dim; ++k) row[k] = static_cast<double>(pixels[k]) / 255.0;
        standardize_in_place(row, *ds.standardization);
        ds.ids[i] = i;
        ds.labels[i] = labels[8 + i];
        if (ds.labels[i] >= ds.num_classes) throw FormatError("label out of range at index " + std::to_string(i));
    }
    return ds;
}

Dataset load_cifar10(std::span<const std::filesystem::path> batch_paths, Split split) {
    std::vector<std::vector<std::uint8_t>> files;
    std::size_t total = 0;
    for (const auto& path : batch_paths) {
        files.push_back(read_maybe_gzip(path));
        if (files.back().size() % kCifarRecord != 0) {
            throw FormatError("truncated CIFAR-10 record in " + path.string() + " (" +
                              std::to_string(files.back().size()) + " bytes is not a multiple of 3073)");
        }
        total += files.back().size() / kCifarRecord;
    }

    Dataset ds;
    ds.num_classes = 10;
    ds.split = split;
    ds.standardization = cifar10_standardization();
    ds.inputs = Tensor2(total, kCifarPixels);
    ds.ids.resize(total);
    ds.labels.resize(total);
    std::size_t i = 0;
    for (std::size_t f = 0; f < files.size(); ++f) {
        const auto& bytes = files[f];
        for (std::size_t offset = 0; offset < bytes.size(); offset += kCifarRecord, ++i) {
            const std::uint8_t label = bytes[offset];
            if (label > 9) {
                throw FormatError("label out of range (" + std::to_string(label) + ") in " + batch_paths[f].string());
            }
            auto row = ds.inputs.row(i);
            for (std::size_t k = 0; k < kCifarPixels; ++k) row[k] = static_cast<double>(bytes[offset + 1 + k]) / 255.0;
            standardize_in_place(row, *ds.standardization);
            ds.ids[i] = i;
            ds.labels[i] = label;
        }
    }
    return ds;
}

Dataset synthetic_gaussian(std::size_t num_classes, std::size_t dim, std::size_t per_class, std::uint64_t seed,
                           Split split) {
    if (num_classes < 1 || dim < 1 || per_class < 1) throw ValidationError("synthetic_gaussian counts must be >= 1");

    Tensor2 means(num_classes, dim);
    for (std::size_t c = 0; c < num_classes; ++c) {
        std::mt19937_64 rng(hash_combine(hash_combine(0x5eed'c1a5'5000'0000ULL, c), dim));
        std::normal_distribution<double> normal;
        auto mu = means.row(c);
        double norm = 0.0;
        while (norm == 0.0) {
            for (double& v : mu) v = normal(rng);
            norm = l2_norm(mu);
        }
        for (double& v : mu) v *= kSyntheticSeparation / norm;
    }

    Dataset ds;
    ds.num_classes = num_classes;
    ds.split = split;
    ds.inputs = Tensor2(num_classes * per_class, dim);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise;
    std::size_t i = 0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        for (std::size_t k = 0; k < per_class; ++k, ++i) {
            auto row = ds.inputs.row(i);
            const auto mu = means.row(c);
            for (std::size_t j = 0; j < dim; ++j) row[j] = mu[j] + noise(rng);
            ds.ids.push_back(i);
            ds.labels.push_back(c);
        }
    }
    return ds;
}

std::vector<double> destandardize(const Standardization& s, std::span<const double> x) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const std::size_t c = i / s.channel_size;
        out[i] = x[i] * s.stddev[c] + s.mean[c];
    }
    return out;
}

std::vector<double> input_norms(const Dataset& ds, InputSpace space) {
    std::vector<double> norms(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (space == InputSpace::raw && ds.standardization) {
            norms[i] = l2_norm(destandardize(*ds.standardization, ds.inputs.row(i)));
        } else {
            norms[i] = l2_norm(ds.inputs.row(i));
        }
    }
    return norms;
}

} // namespace datadiet

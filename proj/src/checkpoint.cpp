#include "datadiet/checkpoint.hpp"

#include "datadiet/error.hpp"

#include <unistd.h>
#include <zlib.h>

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <fstream>
#include <iterator>
#include <string>

namespace datadiet {

namespace {

constexpr char kMagic[4] = {'D', 'D', 'C', 'K'};

class Writer {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out_.insert(out_.end(), b, b + n);
    }
    template <class T>
    void le(T value) {
        for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
    }
    void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }

    void tensor(const std::string& name, std::span<const std::uint32_t> dims, std::span<const double> values) {
        le(static_cast<std::uint16_t>(name.size()));
        bytes(name.data(), name.size());
        le(static_cast<std::uint8_t>(dims.size()));
        for (std::uint32_t d : dims) le(d);
        for (double v : values) f64(v);
    }

    std::vector<std::uint8_t> finish() {
        const auto crc = static_cast<std::uint32_t>(crc32(0L, out_.data(), static_cast<uInt>(out_.size())));
        le(crc);
        return std::move(out_);
    }

private:
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t remaining() const { return bytes_.size() - pos_; }

    template <class T>
    T le() {
        need(sizeof(T));
        T value = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(T{bytes_[pos_ + i]} << (8 * i));
        pos_ += sizeof(T);
        return value;
    }
    double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
    std::string str(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }

private:
    void need(std::size_t n) const {
        if (remaining() < n) throw CheckpointError("corrupt checkpoint: truncated record");
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

struct RawTensor {
    std::string name;
    std::vector<std::uint32_t> dims;
    std::vector<double> values;
};

RawTensor read_tensor(Reader& r) {
    RawTensor t;
    t.name = r.str(r.le<std::uint16_t>());
    const auto rank = r.le<std::uint8_t>();
    std::size_t count = 1;
    for (std::uint8_t i = 0; i < rank; ++i) {
        t.dims.push_back(r.le<std::uint32_t>());
        count *= t.dims.back();
    }
    if (count * 8 > r.remaining()) throw CheckpointError("corrupt checkpoint: tensor '" + t.name + "' overruns file");
    t.values.resize(count);
    for (double& v : t.values) v = r.f64();
    return t;
}

std::optional<std::uint64_t> parse_step_filename(const std::string& name) {
    constexpr std::string_view prefix = "ckpt_";
    constexpr std::string_view suffix = ".bin";
    if (name.size() <= prefix.size() + suffix.size()) return std::nullopt;
    if (!name.starts_with(prefix) || !name.ends_with(suffix)) return std::nullopt;
    const std::string_view digits(name.data() + prefix.size(), name.size() - prefix.size() - suffix.size());
    if (digits.size() > 1 && digits.front() == '0') return std::nullopt;
    std::uint64_t step = 0;
    const auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), step);
    if (ec != std::errc{} || end != digits.data() + digits.size()) return std::nullopt;
    return step;
}

std::filesystem::path temp_path(const std::filesystem::path& dir, std::uint64_t step) {
    static std::atomic<std::uint64_t> counter{0};
    return dir / (".ckpt_" + std::to_string(step) + ".bin.tmp." + std::to_string(::getpid()) + "." +
                  std::to_string(counter.fetch_add(1)));
}

} // namespace

std::vector<std::uint8_t> encode_checkpoint(std::uint64_t step, const Params& params) {
    params.validate();
    Writer w;
    w.bytes(kMagic, sizeof(kMagic));
    w.le(kCheckpointFormatVersion);
    w.le(step);
    const double activation = params.activation == Activation::relu ? 0.0 : 1.0;
    w.tensor("activation", {}, std::span<const double>(&activation, 1));
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const Layer& layer = params.layers[l];
        const std::string prefix = "layers." + std::to_string(l);
        const std::uint32_t wdims[] = {static_cast<std::uint32_t>(layer.weight.rows),
                                       static_cast<std::uint32_t>(layer.weight.cols)};
        w.tensor(prefix + ".weight", wdims, layer.weight.data);
        if (!layer.bias.empty()) {
            const std::uint32_t bdims[] = {static_cast<std::uint32_t>(layer.bias.size())};
            w.tensor(prefix + ".bias", bdims, layer.bias);
        }
    }
    return w.finish();
}

CheckpointRecord decode_checkpoint(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < sizeof(kMagic) + 4 + 8 + 4) throw CheckpointError("corrupt checkpoint: file too short");
    const auto body = bytes.first(bytes.size() - 4);
    Reader tail(bytes.last(4));
    const auto stored_crc = tail.le<std::uint32_t>();
    const auto actual_crc = static_cast<std::uint32_t>(crc32(0L, body.data(), static_cast<uInt>(body.size())));
    if (stored_crc != actual_crc) throw CheckpointError("corrupt checkpoint: checksum mismatch");

    Reader r(body);
    if (r.str(4) != std::string(kMagic, 4)) throw CheckpointError("corrupt checkpoint: bad magic");
    CheckpointRecord rec;
    rec.format_version = r.le<std::uint32_t>();
    if (rec.format_version != kCheckpointFormatVersion) {
        throw CheckpointError("unsupported checkpoint format version " + std::to_string(rec.format_version));
    }
    rec.step = r.le<std::uint64_t>();

    const RawTensor act = read_tensor(r);
    if (act.name != "activation" || !act.dims.empty()) throw CheckpointError("corrupt checkpoint: missing activation");
    rec.params.activation = act.values[0] == 0.0 ? Activation::relu : Activation::identity;

    while (r.remaining() > 0) {
        RawTensor t = read_tensor(r);
        const std::string prefix = "layers." + std::to_string(rec.params.layers.size());
        if (t.name == prefix + ".weight" && t.dims.size() == 2) {
            Layer layer;
            layer.weight.rows = t.dims[0];
            layer.weight.cols = t.dims[1];
            layer.weight.data = std::move(t.values);
            rec.params.layers.push_back(std::move(layer));
        } else if (!rec.params.layers.empty() &&
                   t.name == "layers." + std::to_string(rec.params.layers.size() - 1) + ".bias" &&
                   t.dims.size() == 1 && rec.params.layers.back().bias.empty()) {
            rec.params.layers.back().bias = std::move(t.values);
        } else {
            throw CheckpointError("corrupt checkpoint: unexpected tensor '" + t.name + "'");
        }
    }
    try {
        rec.params.validate();
    } catch (const DimensionError& e) {
        throw CheckpointError(std::string("corrupt checkpoint: ") + e.what());
    }
    return rec;
}

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, std::uint64_t step) {
    return dir / ("ckpt_" + std::to_string(step) + ".bin");
}

void save_checkpoint(const std::filesystem::path& dir, std::uint64_t step, const Params& params,
                     const SaveHooks& hooks) {
    namespace fs = std::filesystem;
    const fs::path final_path = checkpoint_path(dir, step);
    if (fs::exists(final_path)) throw CheckpointError("duplicate step " + std::to_string(step) + " in " + dir.string());

    const std::vector<std::uint8_t> bytes = encode_checkpoint(step, params);
    fs::create_directories(dir);
    const fs::path temp = temp_path(dir, step);
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out) throw CheckpointError("cannot write " + temp.string());
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            std::error_code ignored;
            fs::remove(temp, ignored);
            throw CheckpointError("I/O failure writing " + temp.string());
        }
    }
    if (hooks.before_publish) hooks.before_publish(temp);

    // A hard link publishes the file atomically and, unlike rename, refuses
    // to replace an existing step.
    std::error_code ec;
    fs::create_hard_link(temp, final_path, ec);
    std::error_code ignored;
    fs::remove(temp, ignored);
    if (ec == std::errc::file_exists) {
        throw CheckpointError("duplicate step " + std::to_string(step) + " in " + dir.string());
    }
    if (ec) throw CheckpointError("cannot publish " + final_path.string() + ": " + ec.message());
}

Params restore_checkpoint(const std::filesystem::path& dir, std::optional<std::uint64_t> step) {
    if (!std::filesystem::is_directory(dir)) throw CheckpointError("checkpoint directory " + dir.string() + " missing");
    std::uint64_t target = 0;
    if (step.has_value()) {
        target = *step;
        if (!std::filesystem::exists(checkpoint_path(dir, target))) {
            throw CheckpointError("step " + std::to_string(target) + " not found in " + dir.string());
        }
    } else {
        const auto steps = list_checkpoint_steps(dir);
        if (steps.empty()) throw CheckpointError("no checkpoints in " + dir.string());
        target = steps.back();
    }

    const auto path = checkpoint_path(dir, target);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open " + path.string());
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CheckpointRecord rec = decode_checkpoint(bytes);
    if (rec.step != target) {
        throw CheckpointError("corrupt checkpoint: " + path.string() + " records step " + std::to_string(rec.step));
    }
    return std::move(rec.params);
}

std::vector<std::uint64_t> list_checkpoint_steps(const std::filesystem::path& dir) {
    std::vector<std::uint64_t> steps;
    std::error_code ec;
    for (std::filesystem::directory_iterator it(dir, ec), end; !ec && it != end; it.increment(ec)) {
        if (!it->is_regular_file()) continue;
        if (auto s = parse_step_filename(it->path().filename().string())) steps.push_back(*s);
    }
    if (ec) throw CheckpointError("cannot list " + dir.string() + ": " + ec.message());
    std::sort(steps.begin(), steps.end());
    return steps;
}

CheckpointStore::CheckpointStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw CheckpointError("cannot create " + dir_.string() + ": " + ec.message());
}

} // namespace datadiet

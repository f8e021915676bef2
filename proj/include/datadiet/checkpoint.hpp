#pragma once

// Step-addressed parameter checkpoints.
//
// Files are named ckpt_<step>.bin. Layout, all integers little-endian:
//   "DDCK" | format_version u32 | step u64 |
//   per tensor: name_len u16 | name | rank u8 | dims u32 x rank | f64 payload |
//   CRC32 (zlib polynomial) of every preceding byte, u32.
// Tensors are "activation" (rank 0, 0 = relu, 1 = identity), then
// "layers.<l>.weight" (rank 2) and, when present, "layers.<l>.bias" (rank 1).
//
// Restore treats an explicitly requested step, including step 0, as binding:
// it loads that step or throws. Only an absent step selects the latest one.

#include "datadiet/nn.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

namespace datadiet {

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

struct CheckpointRecord {
    std::uint64_t step = 0;
    Params params;
    std::uint32_t format_version = kCheckpointFormatVersion;
};

std::vector<std::uint8_t> encode_checkpoint(std::uint64_t step, const Params& params);
CheckpointRecord decode_checkpoint(std::span<const std::uint8_t> bytes);

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, std::uint64_t step);

struct SaveHooks {
    /// Called after the temporary file is fully written and before it is
    /// published under its final name. Throwing from here simulates a crash.
    std::function<void(const std::filesystem::path& temp_file)> before_publish;
};

/// Writes ckpt_<step>.bin atomically. Throws CheckpointError("duplicate
/// step ...") if the step already exists, including when a concurrent saver
/// publishes it first.
void save_checkpoint(const std::filesystem::path& dir, std::uint64_t step, const Params& params,
                     const SaveHooks& hooks = {});

/// Present step: exactly that step or CheckpointError. Absent step: the
/// highest stored step, or CheckpointError if the store is empty.
Params restore_checkpoint(const std::filesystem::path& dir, std::optional<std::uint64_t> step = std::nullopt);

/// Ascending steps parsed from ckpt_<step>.bin names; other files are ignored.
std::vector<std::uint64_t> list_checkpoint_steps(const std::filesystem::path& dir);

/// A checkpoint directory, usually <run-root>/<run-id>.
class CheckpointStore {
public:
    explicit CheckpointStore(std::filesystem::path dir);

    const std::filesystem::path& dir() const { return dir_; }

    void save(std::uint64_t step, const Params& params, const SaveHooks& hooks = {}) const {
        save_checkpoint(dir_, step, params, hooks);
    }
    Params restore(std::optional<std::uint64_t> step = std::nullopt) const { return restore_checkpoint(dir_, step); }
    std::vector<std::uint64_t> list_steps() const { return list_checkpoint_steps(dir_); }

private:
    std::filesystem::path dir_;
};

} // namespace datadiet

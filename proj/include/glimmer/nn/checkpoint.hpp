#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "glimmer/cgm_data.hpp"
#include "glimmer/nn/model.hpp"
#include "glimmer/region_loss.hpp"

namespace glimmer::nn {

inline constexpr int kCheckpointFormatVersion = 1;

// Everything needed to reproduce predictions from raw windows.
struct Checkpoint {
    ModelParams params;
    data::Scaler scaler = data::Scaler::identity();
    data::Thresholds thresholds;
    std::string loss = "plain";
    loss::LossWeights weights;
    std::uint64_t seed = 0;
};

// JSON document: {format_version, arch, scaler, thresholds, training, params: [{name, shape, values}]}.
// Parameter values are written as shortest round-trip decimals, so loading restores them bit-exactly.
void save_params(const Checkpoint& ckpt, std::ostream& out);
void save_params(const Checkpoint& ckpt, const std::filesystem::path& path);

// Unreadable files throw a CheckpointError subtype. A stored arch that differs from `expected` throws ShapeError.
Checkpoint load_params(std::istream& in, const std::optional<ArchConfig>& expected = std::nullopt);
Checkpoint load_params(const std::filesystem::path& path, const std::optional<ArchConfig>& expected = std::nullopt);

}  // namespace glimmer::nn

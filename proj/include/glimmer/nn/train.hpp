#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "glimmer/cgm_data.hpp"
#include "glimmer/nn/batch.hpp"
#include "glimmer/nn/model.hpp"
#include "glimmer/random.hpp"
#include "glimmer/region_loss.hpp"

namespace glimmer::nn {

struct TrainConfig {
    std::size_t batch_size = 48;
    std::size_t epochs = 30;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    Execution execution = Execution::Parallel;

    void validate() const;
};

struct EpochStats {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainResult {
    ModelParams params;  // from the epoch with the lowest validation loss
    std::vector<EpochStats> history;
    double initial_val_loss = 0.0;
    std::size_t best_epoch = 0;
    std::size_t optimizer_steps = 0;
};

// Weights ~ U(-sqrt(1/fan_in), sqrt(1/fan_in)); biases 0 except the head bias.
ModelParams init_params(const ArchConfig& arch, Rng& rng, double head_bias);

// Windows must already be scaled. The training order is reshuffled every epoch from cfg.seed.
TrainResult train(std::span<const data::WindowSample> train_set, std::span<const data::WindowSample> val_set,
                  const ArchConfig& arch, const TrainConfig& cfg, const loss::LossFunction& loss_fn);

}  // namespace glimmer::nn

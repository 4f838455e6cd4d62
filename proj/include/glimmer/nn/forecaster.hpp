#pragma once

#include <span>

#include "glimmer/cgm_data.hpp"
#include "glimmer/nn/batch.hpp"
#include "glimmer/nn/checkpoint.hpp"

namespace glimmer::nn {

// Applies the checkpoint's scaler to raw windows and runs the model.
class Forecaster {
public:
    explicit Forecaster(Checkpoint ckpt, Execution exec = Execution::Parallel)
        : ckpt_(std::move(ckpt)), exec_(exec) {}

    Matrix predict(std::span<const data::WindowSample> raw) const {
        const auto scaled = data::apply_scaler(ckpt_.scaler, raw);
        return predict_batch(ckpt_.params, scaled, exec_);
    }

    const Checkpoint& checkpoint() const noexcept { return ckpt_; }

private:
    Checkpoint ckpt_;
    Execution exec_;
};

}  // namespace glimmer::nn

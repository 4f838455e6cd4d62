#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "glimmer/cgm_data.hpp"
#include "glimmer/nn/model.hpp"
#include "glimmer/region_loss.hpp"

namespace glimmer::nn {

// Serial is the reference path; Parallel splits samples across OpenMP threads and reduces
// per-sample gradients in sample order, so both produce bit-identical results.
enum class Execution { Serial, Parallel };

struct BatchGradient {
    double loss = 0.0;
    std::vector<double> grad;
};

// Reusable per-sample buffers.
struct BatchWorkspace {
    std::vector<ForwardTrace> traces;
    std::vector<std::vector<double>> sample_grads;
    std::vector<double> pred;
    std::vector<double> truth;
    std::vector<double> dpred;
};

// Loss pooled over all (sample, horizon) targets of the batch, and its gradient.
BatchGradient batch_gradient_serial(const ModelParams& p, std::span<const data::WindowSample* const> batch,
                                    const loss::LossFunction& loss_fn, BatchWorkspace& ws);
BatchGradient batch_gradient_parallel(const ModelParams& p, std::span<const data::WindowSample* const> batch,
                                      const loss::LossFunction& loss_fn, BatchWorkspace& ws);
BatchGradient batch_gradient(const ModelParams& p, std::span<const data::WindowSample* const> batch,
                             const loss::LossFunction& loss_fn, BatchWorkspace& ws, Execution exec);

// Row i holds the model output for windows[i].
Matrix predict_batch_serial(const ModelParams& p, std::span<const data::WindowSample> windows);
Matrix predict_batch_parallel(const ModelParams& p, std::span<const data::WindowSample> windows);
Matrix predict_batch(const ModelParams& p, std::span<const data::WindowSample> windows, Execution exec);

// Pooled loss over an entire dataset.
double dataset_loss(const ModelParams& p, std::span<const data::WindowSample> windows,
                    const loss::LossFunction& loss_fn, Execution exec);

}  // namespace glimmer::nn

#include "glimmer/nn/batch.hpp"

#include <exception>

#include "glimmer/error.hpp"

namespace glimmer::nn {
namespace {

void prepare(const ModelParams& p, std::size_t n, BatchWorkspace& ws) {
    const std::size_t out = p.arch().output_len;
    ws.traces.resize(n);
    ws.sample_grads.resize(n);
    for (auto& g : ws.sample_grads) g.assign(p.layout().total(), 0.0);
    ws.pred.resize(n * out);
    ws.truth.resize(n * out);
    ws.dpred.resize(n * out);
}

void gather(const ModelParams& p, std::span<const data::WindowSample* const> batch, BatchWorkspace& ws) {
    const std::size_t out = p.arch().output_len;
    for (std::size_t s = 0; s < batch.size(); ++s) {
        if (batch[s]->y.size() != out) {
            throw ShapeError("window target length does not match the model output");
        }
        std::copy(ws.traces[s].out.begin(), ws.traces[s].out.end(), ws.pred.begin() + s * out);
        std::copy(batch[s]->y.begin(), batch[s]->y.end(), ws.truth.begin() + s * out);
    }
}

std::span<const double> dpred_of(const ModelParams& p, const BatchWorkspace& ws, std::size_t s) {
    const std::size_t out = p.arch().output_len;
    return std::span<const double>(ws.dpred).subspan(s * out, out);
}

// Runs body(i) for i in [0, n) across threads; the first exception is rethrown afterwards.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
    std::exception_ptr error;
    const auto count = static_cast<long>(n);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < count; ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
#pragma omp critical(glimmer_batch_error)
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace

BatchGradient batch_gradient_serial(const ModelParams& p, std::span<const data::WindowSample* const> batch,
                                    const loss::LossFunction& loss_fn, BatchWorkspace& ws) {
    if (batch.empty()) throw DomainError("empty batch");
    prepare(p, batch.size(), ws);
    for (std::size_t s = 0; s < batch.size(); ++s) forward(p, batch[s]->x, ws.traces[s]);
    gather(p, batch, ws);

    BatchGradient out;
    out.loss = loss_fn.evaluate(ws.pred, ws.truth, ws.dpred);
    out.grad.assign(p.layout().total(), 0.0);
    BackwardScratch scratch;
    for (std::size_t s = 0; s < batch.size(); ++s) {
        auto& g = ws.sample_grads[s];
        backward(p, batch[s]->x, ws.traces[s], dpred_of(p, ws, s), scratch, g);
        for (std::size_t j = 0; j < g.size(); ++j) out.grad[j] += g[j];
    }
    return out;
}

BatchGradient batch_gradient_parallel(const ModelParams& p, std::span<const data::WindowSample* const> batch,
                                      const loss::LossFunction& loss_fn, BatchWorkspace& ws) {
    if (batch.empty()) throw DomainError("empty batch");
    prepare(p, batch.size(), ws);
    parallel_for(batch.size(), [&](std::size_t s) { forward(p, batch[s]->x, ws.traces[s]); });
    gather(p, batch, ws);

    BatchGradient out;
    out.loss = loss_fn.evaluate(ws.pred, ws.truth, ws.dpred);
    parallel_for(batch.size(), [&](std::size_t s) {
        thread_local BackwardScratch scratch;
        backward(p, batch[s]->x, ws.traces[s], dpred_of(p, ws, s), scratch, ws.sample_grads[s]);
    });

    // Each coordinate sums samples in index order, matching the serial path bit for bit.
    const std::size_t total = p.layout().total();
    out.grad.assign(total, 0.0);
    const auto n_params = static_cast<long>(total);
    const std::size_t n_samples = batch.size();
#pragma omp parallel for schedule(static)
    for (long j = 0; j < n_params; ++j) {
        double acc = 0.0;
        for (std::size_t s = 0; s < n_samples; ++s) acc += ws.sample_grads[s][static_cast<std::size_t>(j)];
        out.grad[static_cast<std::size_t>(j)] = acc;
    }
    return out;
}

BatchGradient batch_gradient(const ModelParams& p, std::span<const data::WindowSample* const> batch,
                             const loss::LossFunction& loss_fn, BatchWorkspace& ws, Execution exec) {
    return exec == Execution::Serial ? batch_gradient_serial(p, batch, loss_fn, ws)
                                     : batch_gradient_parallel(p, batch, loss_fn, ws);
}

Matrix predict_batch_serial(const ModelParams& p, std::span<const data::WindowSample> windows) {
    const std::size_t out = p.arch().output_len;
    Matrix preds(windows.size(), out);
    ForwardTrace trace;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        forward(p, windows[i].x, trace);
        std::copy(trace.out.begin(), trace.out.end(), preds.row(i).begin());
    }
    return preds;
}

Matrix predict_batch_parallel(const ModelParams& p, std::span<const data::WindowSample> windows) {
    const std::size_t out = p.arch().output_len;
    Matrix preds(windows.size(), out);
    parallel_for(windows.size(), [&](std::size_t i) {
        thread_local ForwardTrace trace;
        forward(p, windows[i].x, trace);
        std::copy(trace.out.begin(), trace.out.end(), preds.row(i).begin());
    });
    return preds;
}

Matrix predict_batch(const ModelParams& p, std::span<const data::WindowSample> windows, Execution exec) {
    return exec == Execution::Serial ? predict_batch_serial(p, windows) : predict_batch_parallel(p, windows);
}

double dataset_loss(const ModelParams& p, std::span<const data::WindowSample> windows,
                    const loss::LossFunction& loss_fn, Execution exec) {
    if (windows.empty()) throw DomainError("loss over an empty dataset");
    const Matrix preds = predict_batch(p, windows, exec);
    const std::size_t out = p.arch().output_len;
    std::vector<double> truth;
    truth.reserve(windows.size() * out);
    for (const auto& w : windows) {
        if (w.y.size() != out) throw ShapeError("window target length does not match the model output");
        truth.insert(truth.end(), w.y.begin(), w.y.end());
    }
    std::vector<double> grad(truth.size());
    return loss_fn.evaluate(preds.data(), truth, grad);
}

}  // namespace glimmer::nn

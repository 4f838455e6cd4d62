#include "glimmer/nn/model.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "glimmer/error.hpp"
#include "glimmer/nn/layers.hpp"

namespace glimmer::nn {
namespace {

LstmWeights lstm_weights(const ModelParams& p) {
    const auto& layout = p.layout();
    return {p.block(layout.lstm_input_weight()), p.block(layout.lstm_recurrent_weight()),
            p.block(layout.lstm_bias()), p.arch().lstm_units};
}

std::span<double> grad_block(const ModelParams& p, std::span<double> grad, std::size_t index) {
    const auto& b = p.layout().blocks()[index];
    return grad.subspan(b.offset, b.size);
}

}  // namespace

ModelParams::ModelParams(ArchConfig arch)
    : arch_(std::move(arch)), layout_(arch_), values_(layout_.total(), 0.0) {}

ModelParams::ModelParams(ArchConfig arch, std::vector<double> values)
    : arch_(std::move(arch)), layout_(arch_), values_(std::move(values)) {
    if (values_.size() != layout_.total()) {
        throw ShapeError("parameter vector has " + std::to_string(values_.size()) + " values, architecture needs " +
                         std::to_string(layout_.total()));
    }
}

std::span<double> ModelParams::block(std::size_t index) {
    const auto& b = layout_.blocks().at(index);
    return std::span(values_).subspan(b.offset, b.size);
}

std::span<const double> ModelParams::block(std::size_t index) const {
    const auto& b = layout_.blocks().at(index);
    return std::span(values_).subspan(b.offset, b.size);
}

void ForwardTrace::resize(const ArchConfig& arch) {
    conv_pre.resize(arch.conv_layers.size());
    conv_act.resize(arch.conv_layers.size());
    std::size_t steps = arch.input_len;
    for (std::size_t l = 0; l < arch.conv_layers.size(); ++l) {
        steps -= arch.conv_layers[l].kernel - 1;
        conv_pre[l].resize(steps * arch.conv_layers[l].filters);
        conv_act[l].resize(steps * arch.conv_layers[l].filters);
    }
    const std::size_t h = arch.lstm_units;
    gates.resize(steps * 4 * h);
    cell.resize(steps * h);
    cell_tanh.resize(steps * h);
    hidden.resize(steps * h);
    dense_pre.resize(arch.dense_hidden);
    dense_act.resize(arch.dense_hidden);
    out_pre.resize(arch.output_len);
    out.resize(arch.output_len);
}

void BackwardScratch::resize(const ArchConfig& arch) {
    dconv.resize(arch.conv_layers.size());
    std::size_t steps = arch.input_len;
    for (std::size_t l = 0; l < arch.conv_layers.size(); ++l) {
        steps -= arch.conv_layers[l].kernel - 1;
        dconv[l].resize(steps * arch.conv_layers[l].filters);
    }
    dhidden.resize(arch.flat_dim());
    ddense.resize(arch.dense_hidden);
    dpre.resize(std::max({arch.output_len, arch.dense_hidden, std::size_t{1}}));
}

void forward(const ModelParams& p, const Matrix& x, ForwardTrace& trace) {
    const auto& arch = p.arch();
    const auto& layout = p.layout();
    if (x.rows() != arch.input_len || x.cols() != arch.input_features) {
        throw ShapeError("model input must be " + std::to_string(arch.input_len) + "x" +
                         std::to_string(arch.input_features));
    }
    trace.resize(arch);

    std::span<const double> in = x.data();
    std::size_t steps = arch.input_len;
    std::size_t channels = arch.input_features;
    for (std::size_t l = 0; l < arch.conv_layers.size(); ++l) {
        const auto& spec = arch.conv_layers[l];
        kernel::conv1d(in, steps, channels, p.block(layout.conv_weight(l)), spec.kernel, spec.filters,
                       p.block(layout.conv_bias(l)), trace.conv_pre[l]);
        std::transform(trace.conv_pre[l].begin(), trace.conv_pre[l].end(), trace.conv_act[l].begin(), kernel::relu);
        in = trace.conv_act[l];
        steps -= spec.kernel - 1;
        channels = spec.filters;
    }

    kernel::lstm(in, steps, channels, lstm_weights(p), trace.gates, trace.cell, trace.cell_tanh, trace.hidden);

    std::span<const double> flat = trace.hidden;
    if (arch.dense_hidden > 0) {
        kernel::dense(flat, p.block(layout.hidden_weight()), p.block(layout.hidden_bias()), trace.dense_pre);
        std::transform(trace.dense_pre.begin(), trace.dense_pre.end(), trace.dense_act.begin(), kernel::relu);
        flat = trace.dense_act;
    }
    kernel::dense(flat, p.block(layout.head_weight()), p.block(layout.head_bias()), trace.out_pre);
    for (std::size_t j = 0; j < trace.out_pre.size(); ++j) {
        if (!std::isfinite(trace.out_pre[j])) {
            throw NumericError("non-finite model output");
        }
        trace.out[j] = kernel::relu(trace.out_pre[j]);
    }
}

void backward(const ModelParams& p, const Matrix& x, const ForwardTrace& trace, std::span<const double> dout,
              BackwardScratch& scratch, std::span<double> grad) {
    const auto& arch = p.arch();
    const auto& layout = p.layout();
    scratch.resize(arch);

    // ReLU head; the subgradient at 0 is 0.
    std::span<double> dpre(scratch.dpre.data(), arch.output_len);
    for (std::size_t j = 0; j < arch.output_len; ++j) {
        dpre[j] = trace.out_pre[j] > 0.0 ? dout[j] : 0.0;
    }
    if (arch.dense_hidden > 0) {
        kernel::dense_backward(trace.dense_act, p.block(layout.head_weight()), dpre, scratch.ddense,
                               grad_block(p, grad, layout.head_weight()), grad_block(p, grad, layout.head_bias()));
        std::span<double> dhid(scratch.dpre.data(), arch.dense_hidden);
        for (std::size_t j = 0; j < arch.dense_hidden; ++j) {
            dhid[j] = trace.dense_pre[j] > 0.0 ? scratch.ddense[j] : 0.0;
        }
        kernel::dense_backward(trace.hidden, p.block(layout.hidden_weight()), dhid, scratch.dhidden,
                               grad_block(p, grad, layout.hidden_weight()),
                               grad_block(p, grad, layout.hidden_bias()));
    } else {
        kernel::dense_backward(trace.hidden, p.block(layout.head_weight()), dpre, scratch.dhidden,
                               grad_block(p, grad, layout.head_weight()), grad_block(p, grad, layout.head_bias()));
    }

    const std::size_t n_conv = arch.conv_layers.size();
    const std::size_t steps = arch.lstm_steps();
    const std::size_t lstm_in = arch.lstm_inputs();
    std::span<const double> lstm_x = n_conv > 0 ? std::span<const double>(trace.conv_act.back()) : x.data();
    std::span<double> dlstm_x = n_conv > 0 ? std::span<double>(scratch.dconv.back()) : std::span<double>{};
    kernel::lstm_backward(lstm_x, steps, lstm_in, lstm_weights(p), trace.gates, trace.cell, trace.cell_tanh,
                          trace.hidden, scratch.dhidden, dlstm_x, grad_block(p, grad, layout.lstm_input_weight()),
                          grad_block(p, grad, layout.lstm_recurrent_weight()),
                          grad_block(p, grad, layout.lstm_bias()));

    for (std::size_t l = n_conv; l-- > 0;) {
        // Gradient w.r.t. this layer's activation becomes gradient w.r.t. its pre-activation.
        auto& d = scratch.dconv[l];
        const auto& pre = trace.conv_pre[l];
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (!(pre[i] > 0.0)) d[i] = 0.0;
        }
        const auto& spec = arch.conv_layers[l];
        const std::size_t in_channels = l > 0 ? arch.conv_layers[l - 1].filters : arch.input_features;
        const std::size_t in_steps = (l > 0 ? trace.conv_act[l - 1].size() : x.size()) / in_channels;
        std::span<const double> in = l > 0 ? std::span<const double>(trace.conv_act[l - 1]) : x.data();
        std::span<double> din = l > 0 ? std::span<double>(scratch.dconv[l - 1]) : std::span<double>{};
        kernel::conv1d_backward(in, in_steps, in_channels, p.block(layout.conv_weight(l)), spec.kernel, spec.filters,
                                d, din, grad_block(p, grad, layout.conv_weight(l)),
                                grad_block(p, grad, layout.conv_bias(l)));
    }
}

std::vector<double> model_forward(const ModelParams& p, const Matrix& x) {
    ForwardTrace trace;
    forward(p, x, trace);
    return trace.out;
}

SampleGradient model_backward(const ModelParams& p, const Matrix& x, std::span<const double> y,
                              const loss::LossFunction& loss_fn) {
    if (y.size() != p.arch().output_len) {
        throw ShapeError("target length does not match the model output");
    }
    ForwardTrace trace;
    forward(p, x, trace);
    std::vector<double> dout(y.size());
    SampleGradient out;
    out.loss = loss_fn.evaluate(trace.out, y, dout);
    out.grad.assign(p.layout().total(), 0.0);
    BackwardScratch scratch;
    backward(p, x, trace, dout, scratch, out.grad);
    return out;
}

}  // namespace glimmer::nn

#include "glimmer/nn/arch.hpp"

#include <utility>

#include "glimmer/error.hpp"

namespace glimmer::nn {

void ArchConfig::validate() const {
    if (input_len == 0 || input_features == 0 || output_len == 0 || lstm_units == 0) {
        throw ShapeError("architecture sizes must be positive");
    }
    std::size_t steps = input_len;
    for (const auto& c : conv_layers) {
        if (c.kernel == 0 || c.filters == 0) {
            throw ShapeError("conv layers need kernel >= 1 and filters >= 1");
        }
        if (c.kernel > steps) {
            throw ShapeError("conv stack shrinks the sequence below one step");
        }
        steps -= c.kernel - 1;
    }
}

std::size_t ArchConfig::lstm_steps() const {
    std::size_t steps = input_len;
    for (const auto& c : conv_layers) steps -= c.kernel - 1;
    return steps;
}

std::size_t ArchConfig::lstm_inputs() const {
    return conv_layers.empty() ? input_features : conv_layers.back().filters;
}

ParamLayout::ParamLayout(const ArchConfig& arch) {
    arch.validate();
    std::size_t channels = arch.input_features;
    for (std::size_t l = 0; l < arch.conv_layers.size(); ++l) {
        const auto& c = arch.conv_layers[l];
        const auto prefix = "conv" + std::to_string(l);
        conv_weight_.push_back(add(prefix + ".weight", {c.kernel, channels, c.filters}));
        conv_bias_.push_back(add(prefix + ".bias", {c.filters}));
        channels = c.filters;
    }
    const std::size_t gates = 4 * arch.lstm_units;
    lstm_w_ = add("lstm.input_weight", {channels, gates});
    lstm_u_ = add("lstm.recurrent_weight", {arch.lstm_units, gates});
    lstm_b_ = add("lstm.bias", {gates});
    std::size_t head_in = arch.flat_dim();
    if (arch.dense_hidden > 0) {
        hidden_w_ = add("hidden.weight", {head_in, arch.dense_hidden});
        hidden_b_ = add("hidden.bias", {arch.dense_hidden});
        head_in = arch.dense_hidden;
    }
    head_w_ = add("head.weight", {head_in, arch.output_len});
    head_b_ = add("head.bias", {arch.output_len});
}

std::size_t ParamLayout::add(std::string name, std::vector<std::size_t> shape) {
    std::size_t size = 1;
    for (auto d : shape) size *= d;
    blocks_.push_back({std::move(name), std::move(shape), total_, size});
    total_ += size;
    return blocks_.size() - 1;
}

}  // namespace glimmer::nn

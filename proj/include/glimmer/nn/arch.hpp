#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace glimmer::nn {

struct ConvSpec {
    std::size_t filters = 1;
    std::size_t kernel = 1;

    bool operator==(const ConvSpec&) const = default;
};

// conv stack -> LSTM (full sequence) -> flatten -> [dense hidden + ReLU] -> dense head + ReLU.
struct ArchConfig {
    std::vector<ConvSpec> conv_layers{{32, 4}, {16, 4}, {8, 4}};
    std::size_t lstm_units = 8;
    std::size_t dense_hidden = 0;  // 0: the head reads the flattened LSTM output directly
    std::size_t output_len = 12;
    std::size_t input_len = 72;
    std::size_t input_features = 6;

    void validate() const;
    std::size_t lstm_steps() const;  // input_len minus the receptive-field shrinkage of the conv stack
    std::size_t lstm_inputs() const;
    std::size_t flat_dim() const { return lstm_steps() * lstm_units; }

    bool operator==(const ArchConfig&) const = default;
};

struct ParamBlock {
    std::string name;
    std::vector<std::size_t> shape;
    std::size_t offset = 0;
    std::size_t size = 0;
};

// Flat parameter vector layout in declared order:
// conv{l}.weight (K x C x F), conv{l}.bias (F), lstm.input_weight (F x 4H), lstm.recurrent_weight
// (H x 4H), lstm.bias (4H) with gate order input/forget/cell/output, [hidden.weight, hidden.bias],
// head.weight (D x out), head.bias (out).
class ParamLayout {
public:
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    explicit ParamLayout(const ArchConfig& arch);

    const std::vector<ParamBlock>& blocks() const noexcept { return blocks_; }
    std::size_t total() const noexcept { return total_; }

    std::size_t conv_weight(std::size_t layer) const { return conv_weight_[layer]; }
    std::size_t conv_bias(std::size_t layer) const { return conv_bias_[layer]; }
    std::size_t lstm_input_weight() const noexcept { return lstm_w_; }
    std::size_t lstm_recurrent_weight() const noexcept { return lstm_u_; }
    std::size_t lstm_bias() const noexcept { return lstm_b_; }
    std::size_t hidden_weight() const noexcept { return hidden_w_; }
    std::size_t hidden_bias() const noexcept { return hidden_b_; }
    std::size_t head_weight() const noexcept { return head_w_; }
    std::size_t head_bias() const noexcept { return head_b_; }

private:
    std::size_t add(std::string name, std::vector<std::size_t> shape);

    std::vector<ParamBlock> blocks_;
    std::size_t total_ = 0;
    std::vector<std::size_t> conv_weight_;
    std::vector<std::size_t> conv_bias_;
    std::size_t lstm_w_ = npos, lstm_u_ = npos, lstm_b_ = npos;
    std::size_t hidden_w_ = npos, hidden_b_ = npos;
    std::size_t head_w_ = npos, head_b_ = npos;
};

}  // namespace glimmer::nn

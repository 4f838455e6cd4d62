#pragma once

#include <cstddef>
#include <span>

#include "glimmer/matrix.hpp"

namespace glimmer::nn {

// Valid-padding, stride-1 convolution over a (T x C) sequence with a (K x C x F) kernel.
// out[t, f] = b[f] + sum_{k,c} x[t+k, c] * w[k, c, f]. No activation.
Matrix conv1d_forward(const Matrix& x, std::span<const double> w, std::size_t kernel, std::span<const double> b);

struct LstmWeights {
    std::span<const double> input;      // F x 4H
    std::span<const double> recurrent;  // H x 4H
    std::span<const double> bias;       // 4H
    std::size_t units = 0;
};

// Standard LSTM cell with zero initial state; returns the full (T x H) hidden sequence.
Matrix lstm_forward(const Matrix& seq, const LstmWeights& w);

namespace kernel {

// Raw kernels used by the model; all buffers are row-major and pre-sized by the caller.

void conv1d(std::span<const double> x, std::size_t steps, std::size_t channels, std::span<const double> w,
            std::size_t kernel, std::size_t filters, std::span<const double> b, std::span<double> out);

// Accumulates into dw, db; overwrites dx when it is non-empty.
void conv1d_backward(std::span<const double> x, std::size_t steps, std::size_t channels,
                     std::span<const double> w, std::size_t kernel, std::size_t filters,
                     std::span<const double> dout, std::span<double> dx, std::span<double> dw,
                     std::span<double> db);

// gates: T x 4H post-activation (i, f, g, o); cell and cell_tanh: T x H; hidden: T x H.
void lstm(std::span<const double> x, std::size_t steps, std::size_t inputs, const LstmWeights& w,
          std::span<double> gates, std::span<double> cell, std::span<double> cell_tanh, std::span<double> hidden);

// Backpropagation through time. dhidden is the loss gradient w.r.t. every hidden state.
void lstm_backward(std::span<const double> x, std::size_t steps, std::size_t inputs, const LstmWeights& w,
                   std::span<const double> gates, std::span<const double> cell, std::span<const double> cell_tanh,
                   std::span<const double> hidden, std::span<const double> dhidden, std::span<double> dx,
                   std::span<double> dw_input, std::span<double> dw_recurrent, std::span<double> dbias);

// out = b + in * W for W of shape (in.size() x out.size()).
void dense(std::span<const double> in, std::span<const double> w, std::span<const double> b, std::span<double> out);

void dense_backward(std::span<const double> in, std::span<const double> w, std::span<const double> dout,
                    std::span<double> din, std::span<double> dw, std::span<double> db);

// NaN passes through so non-finite values surface at the output check.
inline double relu(double z) { return z < 0.0 ? 0.0 : z; }

}  // namespace kernel
}  // namespace glimmer::nn

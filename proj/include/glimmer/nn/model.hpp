#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "glimmer/matrix.hpp"
#include "glimmer/nn/arch.hpp"
#include "glimmer/region_loss.hpp"

namespace glimmer::nn {

class ModelParams {
public:
    explicit ModelParams(ArchConfig arch);
    ModelParams(ArchConfig arch, std::vector<double> values);

    const ArchConfig& arch() const noexcept { return arch_; }
    const ParamLayout& layout() const noexcept { return layout_; }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    std::span<double> block(std::size_t index);
    std::span<const double> block(std::size_t index) const;

    bool operator==(const ModelParams& other) const { return arch_ == other.arch_ && values_ == other.values_; }

private:
    ArchConfig arch_;
    ParamLayout layout_;
    std::vector<double> values_;
};

// Intermediate values of one forward pass, kept for the backward pass.
struct ForwardTrace {
    std::vector<std::vector<double>> conv_pre;  // per conv layer, T_l x F_l
    std::vector<std::vector<double>> conv_act;
    std::vector<double> gates;
    std::vector<double> cell;
    std::vector<double> cell_tanh;
    std::vector<double> hidden;  // flattened LSTM output
    std::vector<double> dense_pre;
    std::vector<double> dense_act;
    std::vector<double> out_pre;
    std::vector<double> out;

    void resize(const ArchConfig& arch);
};

// Scratch buffers for one backward pass.
struct BackwardScratch {
    std::vector<std::vector<double>> dconv;  // gradient w.r.t. each conv layer's activation
    std::vector<double> dhidden;
    std::vector<double> ddense;
    std::vector<double> dpre;

    void resize(const ArchConfig& arch);
};

// Fills trace; throws NumericError if the output pre-activation is not finite.
void forward(const ModelParams& p, const Matrix& x, ForwardTrace& trace);

// Accumulates d loss / d params into grad given d loss / d output.
void backward(const ModelParams& p, const Matrix& x, const ForwardTrace& trace, std::span<const double> dout,
              BackwardScratch& scratch, std::span<double> grad);

std::vector<double> model_forward(const ModelParams& p, const Matrix& x);

struct SampleGradient {
    double loss = 0.0;
    std::vector<double> grad;
};

SampleGradient model_backward(const ModelParams& p, const Matrix& x, std::span<const double> y,
                              const loss::LossFunction& loss_fn);

}  // namespace glimmer::nn

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace glimmer::nn {

// Bias-corrected adaptive-moment optimizer.
class Adam {
public:
    explicit Adam(std::size_t n_params, double learning_rate = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                  double epsilon = 1e-8);

    void step(std::span<double> params, std::span<const double> grads);
    std::size_t steps() const noexcept { return steps_; }

private:
    double lr_;
    double beta1_;
    double beta2_;
    double eps_;
    std::size_t steps_ = 0;
    std::vector<double> m_;
    std::vector<double> v_;
};

}  // namespace glimmer::nn

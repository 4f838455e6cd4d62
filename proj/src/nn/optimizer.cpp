#include "glimmer/nn/optimizer.hpp"

#include <cmath>

#include "glimmer/error.hpp"

namespace glimmer::nn {

Adam::Adam(std::size_t n_params, double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon), m_(n_params, 0.0), v_(n_params, 0.0) {
    if (!(learning_rate > 0.0)) throw DomainError("learning rate must be positive");
}

void Adam::step(std::span<double> params, std::span<const double> grads) {
    if (params.size() != m_.size() || grads.size() != m_.size()) {
        throw ShapeError("optimizer state does not match parameter count");
    }
    ++steps_;
    const double correction1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
    const double correction2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
        const double m_hat = m_[i] / correction1;
        const double v_hat = v_[i] / correction2;
        params[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
    }
}

}  // namespace glimmer::nn

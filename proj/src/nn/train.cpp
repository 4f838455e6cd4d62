#include "glimmer/nn/train.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "glimmer/error.hpp"
#include "glimmer/nn/optimizer.hpp"

namespace glimmer::nn {
namespace {

void fill_uniform(std::span<double> values, std::size_t fan_in, Rng& rng) {
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    for (auto& v : values) v = rng.uniform(-bound, bound);
}

bool all_finite(std::span<const double> values) {
    for (double v : values) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace

void TrainConfig::validate() const {
    if (batch_size == 0) throw ConfigError("batch_size must be at least 1");
    if (epochs == 0) throw ConfigError("epochs must be at least 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
}

ModelParams init_params(const ArchConfig& arch, Rng& rng, double head_bias) {
    ModelParams p(arch);
    const auto& layout = p.layout();
    std::size_t channels = arch.input_features;
    for (std::size_t l = 0; l < arch.conv_layers.size(); ++l) {
        fill_uniform(p.block(layout.conv_weight(l)), arch.conv_layers[l].kernel * channels, rng);
        channels = arch.conv_layers[l].filters;
    }
    fill_uniform(p.block(layout.lstm_input_weight()), channels, rng);
    fill_uniform(p.block(layout.lstm_recurrent_weight()), arch.lstm_units, rng);
    std::size_t head_in = arch.flat_dim();
    if (arch.dense_hidden > 0) {
        fill_uniform(p.block(layout.hidden_weight()), head_in, rng);
        head_in = arch.dense_hidden;
    }
    fill_uniform(p.block(layout.head_weight()), head_in, rng);
    for (auto& b : p.block(layout.head_bias())) b = head_bias;
    return p;
}

TrainResult train(std::span<const data::WindowSample> train_set, std::span<const data::WindowSample> val_set,
                  const ArchConfig& arch, const TrainConfig& cfg, const loss::LossFunction& loss_fn) {
    cfg.validate();
    arch.validate();
    if (train_set.empty() || val_set.empty()) {
        throw DataError("training needs non-empty training and validation sets");
    }

    double target_sum = 0.0;
    std::size_t target_count = 0;
    for (const auto& w : train_set) {
        for (double v : w.y) target_sum += v;
        target_count += w.y.size();
    }

    Rng rng(cfg.seed);
    ModelParams params = init_params(arch, rng, target_sum / static_cast<double>(target_count));
    Adam optimizer(params.layout().total(), cfg.learning_rate);
    BatchWorkspace ws;

    TrainResult result{params, {}, 0.0, 0, 0};
    result.initial_val_loss = dataset_loss(params, val_set, loss_fn, cfg.execution);
    double best = std::numeric_limits<double>::infinity();

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<const data::WindowSample*> batch;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        // Fisher-Yates with the run's generator.
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[rng.index(i)]);
        }
        double loss_sum = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(&train_set[order[i]]);

            BatchGradient g;
            try {
                g = batch_gradient(params, batch, loss_fn, ws, cfg.execution);
            } catch (const NumericError& e) {
                throw NumericError(e.what(), static_cast<long>(epoch));
            }
            if (!std::isfinite(g.loss) || !all_finite(g.grad)) {
                throw NumericError("non-finite loss or gradient", static_cast<long>(epoch));
            }
            optimizer.step(params.values(), g.grad);
            loss_sum += g.loss;
            ++n_batches;
        }
        if (!all_finite(params.values())) {
            throw NumericError("non-finite parameters", static_cast<long>(epoch));
        }

        double val_loss = 0.0;
        try {
            val_loss = dataset_loss(params, val_set, loss_fn, cfg.execution);
        } catch (const NumericError& e) {
            throw NumericError(e.what(), static_cast<long>(epoch));
        }
        result.history.push_back({epoch, loss_sum / static_cast<double>(n_batches), val_loss});
        if (val_loss < best) {
            best = val_loss;
            result.best_epoch = epoch;
            result.params = params;
        }
    }
    result.optimizer_steps = optimizer.steps();
    return result;
}

}  // namespace glimmer::nn

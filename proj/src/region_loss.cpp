#include "glimmer/region_loss.hpp"

#include <cmath>

namespace glimmer::loss {
namespace {

void check_inputs(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size()) {
        throw DomainError("prediction and truth lengths differ");
    }
    if (pred.empty()) {
        throw DomainError("loss needs at least one element");
    }
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

std::size_t slot(data::Region r) { return static_cast<std::size_t>(static_cast<int>(r) - 1); }

}  // namespace

void LossWeights::validate() const {
    for (double w : {hypo, normal, hyper}) {
        if (!(std::isfinite(w) && w > 0.0)) {
            throw DomainError("loss weights must be finite and positive");
        }
    }
}

double LossWeights::for_region(data::Region r) const {
    switch (r) {
        case data::Region::Hypo: return hypo;
        case data::Region::Normal: return normal;
        case data::Region::Hyper: return hyper;
    }
    return normal;
}

RegionLoss weighted_region_loss(std::span<const double> pred, std::span<const double> truth, const LossWeights& w,
                                const data::Thresholds& t) {
    check_inputs(pred, truth);
    RegionLoss out;
    std::array<double, 3> sums{};
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const auto k = slot(data::classify_region(truth[i], t));
        ++out.counts[k];
        sums[k] += std::abs(truth[i] - pred[i]);
    }
    const std::array<double, 3> weights{w.hypo, w.normal, w.hyper};
    for (std::size_t k = 0; k < 3; ++k) {
        if (out.counts[k] > 0) {
            out.value += weights[k] / static_cast<double>(out.counts[k]) * sums[k];
        }
    }
    return out;
}

std::vector<double> weighted_region_loss_grad(std::span<const double> pred, std::span<const double> truth,
                                              const LossWeights& w, const data::Thresholds& t) {
    check_inputs(pred, truth);
    std::vector<data::Region> regions(pred.size());
    std::array<std::size_t, 3> counts{};
    for (std::size_t i = 0; i < pred.size(); ++i) {
        regions[i] = data::classify_region(truth[i], t);
        ++counts[slot(regions[i])];
    }
    std::vector<double> grad(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double scale = w.for_region(regions[i]) / static_cast<double>(counts[slot(regions[i])]);
        grad[i] = scale * sign(pred[i] - truth[i]);
    }
    return grad;
}

double MeanAbsoluteError::evaluate(std::span<const double> pred, std::span<const double> truth,
                                   std::span<double> grad) const {
    check_inputs(pred, truth);
    const double inv_n = 1.0 / static_cast<double>(pred.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        sum += std::abs(truth[i] - pred[i]);
        grad[i] = inv_n * sign(pred[i] - truth[i]);
    }
    return sum * inv_n;
}

WeightedRegionLoss::WeightedRegionLoss(LossWeights w, data::Thresholds t) : weights_(w), thresholds_(t) {
    weights_.validate();
    thresholds_.validate();
}

double WeightedRegionLoss::evaluate(std::span<const double> pred, std::span<const double> truth,
                                    std::span<double> grad) const {
    const auto g = weighted_region_loss_grad(pred, truth, weights_, thresholds_);
    std::copy(g.begin(), g.end(), grad.begin());
    return weighted_region_loss(pred, truth, weights_, thresholds_).value;
}

}  // namespace glimmer::loss

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "glimmer/cgm_data.hpp"

namespace glimmer::loss {

struct LossWeights {
    double hypo = 1.0;
    double normal = 1.0;
    double hyper = 1.0;

    void validate() const;
    double for_region(data::Region r) const;
};

// Default weights for the weighted mode: the average of per-patient GA optima on clinical CGM data.
inline constexpr LossWeights kPublishedWeights{3.296, 1.0, 2.382};

struct RegionLoss {
    double value = 0.0;
    std::array<std::size_t, 3> counts{};  // hypo, normal, hyper
};

// Sum over non-empty regions r of (w_r / n_r) * sum |truth - pred|, with each element's
// region taken from its true value.
RegionLoss weighted_region_loss(std::span<const double> pred, std::span<const double> truth, const LossWeights& w,
                                const data::Thresholds& t);

// d loss / d pred; sign(0) = 0.
std::vector<double> weighted_region_loss_grad(std::span<const double> pred, std::span<const double> truth,
                                              const LossWeights& w, const data::Thresholds& t);

// Batch objective used by training: pooled over every scalar target in the batch.
class LossFunction {
public:
    virtual ~LossFunction() = default;

    // Returns the loss and writes d loss / d pred into grad (same length as pred).
    virtual double evaluate(std::span<const double> pred, std::span<const double> truth,
                            std::span<double> grad) const = 0;
    virtual std::string name() const = 0;
};

class MeanAbsoluteError final : public LossFunction {
public:
    double evaluate(std::span<const double> pred, std::span<const double> truth,
                    std::span<double> grad) const override;
    std::string name() const override { return "plain"; }
};

class WeightedRegionLoss final : public LossFunction {
public:
    WeightedRegionLoss(LossWeights w, data::Thresholds t);

    double evaluate(std::span<const double> pred, std::span<const double> truth,
                    std::span<double> grad) const override;
    std::string name() const override { return "weighted"; }

    const LossWeights& weights() const noexcept { return weights_; }

private:
    LossWeights weights_;
    data::Thresholds thresholds_;
};

}  // namespace glimmer::loss

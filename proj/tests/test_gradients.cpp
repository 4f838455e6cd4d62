#include <gtest/gtest.h>

#include <omp.h>

#include "glimmer/nn/batch.hpp"
#include "glimmer/nn/train.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace glimmer;
using namespace glimmer::nn;

namespace {

struct GradCase {
    const char* name;
    std::size_t dense_hidden;
    bool weighted;
};

void PrintTo(const GradCase& c, std::ostream* os) { *os << c.name; }

class FiniteDifference : public ::testing::TestWithParam<GradCase> {};

}  // namespace

TEST_P(FiniteDifference, AnalyticMatchesCentralDifferences) {
    const auto c = GetParam();
    const auto arch = fixtures::tiny_arch(c.dense_hidden);
    const auto batch = fixtures::random_windows(arch, 5, 77);
    Rng rng(2024);
    const auto params = init_params(arch, rng, 150.0);
    const loss::MeanAbsoluteError plain;
    const loss::WeightedRegionLoss weighted(loss::kPublishedWeights, data::Thresholds{});
    const loss::LossFunction& fn = c.weighted ? static_cast<const loss::LossFunction&>(weighted) : plain;

    const auto r = oracle::finite_difference_check(params, batch, fn);
    EXPECT_LT(r.max_rel_error, 1e-4) << "worst coordinate " << r.worst_index;
    EXPECT_GT(r.checked, params.layout().total() * 9 / 10);
}

INSTANTIATE_TEST_SUITE_P(Losses, FiniteDifference,
                         ::testing::Values(GradCase{"plain", 0, false}, GradCase{"weighted", 0, true},
                                           GradCase{"plain_hidden", 5, false},
                                           GradCase{"weighted_hidden", 5, true}),
                         [](const auto& info) { return std::string(info.param.name); });

TEST(Backward, HeadBiasGradientForOvershoot) {
    ModelParams p{ArchConfig{}};
    for (auto& v : p.block(p.layout().head_bias())) v = 140.0;
    const auto w = fixtures::random_windows(ArchConfig{}, 1, 3, 100.0, 100.0);
    const auto g = model_backward(p, w[0].x, w[0].y, loss::MeanAbsoluteError{});
    EXPECT_DOUBLE_EQ(g.loss, 40.0);
    const auto off = p.layout().blocks()[p.layout().head_bias()].offset;
    for (std::size_t k = 0; k < 12; ++k) EXPECT_DOUBLE_EQ(g.grad[off + k], 1.0 / 12.0);
}

TEST(Backward, ZeroGradientAtExactFit) {
    const auto arch = fixtures::tiny_arch();
    ModelParams p{arch};
    for (auto& v : p.block(p.layout().head_bias())) v = 123.0;
    const auto w = fixtures::random_windows(arch, 1, 3, 123.0, 123.0);
    const loss::MeanAbsoluteError plain;
    const loss::WeightedRegionLoss weighted(loss::kPublishedWeights, {});
    for (const loss::LossFunction* fn : {static_cast<const loss::LossFunction*>(&plain),
                                         static_cast<const loss::LossFunction*>(&weighted)}) {
        const auto g = model_backward(p, w[0].x, w[0].y, *fn);
        EXPECT_EQ(g.loss, 0.0);
        for (double v : g.grad) EXPECT_EQ(v, 0.0);
    }
}

TEST(BatchGradient, ParallelIsBitIdenticalToSerial) {
    const ArchConfig arch;
    Rng rng(9);
    const auto p = init_params(arch, rng, 140.0);
    const auto windows = fixtures::random_windows(arch, 23, 5);
    std::vector<const data::WindowSample*> ptrs;
    for (const auto& w : windows) ptrs.push_back(&w);
    const loss::WeightedRegionLoss fn(loss::kPublishedWeights, {});

    BatchWorkspace ws;
    const auto serial = batch_gradient_serial(p, ptrs, fn, ws);
    for (int threads : {1, 2, 3, 4}) {
        omp_set_num_threads(threads);
        const auto par = batch_gradient_parallel(p, ptrs, fn, ws);
        EXPECT_EQ(par.loss, serial.loss) << threads << " threads";
        EXPECT_EQ(par.grad, serial.grad) << threads << " threads";
        const Matrix a = predict_batch_serial(p, windows);
        const Matrix b = predict_batch_parallel(p, windows);
        EXPECT_EQ(a, b);
    }
    omp_set_num_threads(omp_get_num_procs());
}

TEST(BatchGradient, EqualsSumOfSampleGradientsUnderPooledLoss) {
    const auto arch = fixtures::tiny_arch();
    Rng rng(4);
    const auto p = init_params(arch, rng, 150.0);
    const auto windows = fixtures::random_windows(arch, 3, 6);
    std::vector<const data::WindowSample*> ptrs;
    for (const auto& w : windows) ptrs.push_back(&w);
    const loss::MeanAbsoluteError fn;
    BatchWorkspace ws;
    const auto batch = batch_gradient_serial(p, ptrs, fn, ws);
    // Pooled MAE over 3 samples is the mean of the per-sample MAEs.
    std::vector<double> summed(batch.grad.size(), 0.0);
    double loss = 0.0;
    for (const auto& w : windows) {
        const auto g = model_backward(p, w.x, w.y, fn);
        loss += g.loss / 3.0;
        for (std::size_t j = 0; j < summed.size(); ++j) summed[j] += g.grad[j] / 3.0;
    }
    EXPECT_NEAR(batch.loss, loss, 1e-12);
    for (std::size_t j = 0; j < summed.size(); ++j) EXPECT_NEAR(batch.grad[j], summed[j], 1e-12);
}

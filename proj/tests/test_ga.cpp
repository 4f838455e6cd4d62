#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "glimmer/error.hpp"
#include "glimmer/ga_tuner.hpp"
#include "test_support.hpp"

using namespace glimmer;
using namespace glimmer::ga;

namespace {

std::vector<Individual> with_fitness(std::initializer_list<double> f) {
    std::vector<Individual> pop;
    double k = 1.0;
    for (double v : f) pop.push_back({k, k + 0.5, v}), k += 1.0;
    return pop;
}

}  // namespace

TEST(GaConfig, Validation) {
    GaConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.population = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = {};
    cfg.population = 7;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = {};
    cfg.generations = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = {};
    cfg.bounds = {5, 5};
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = {};
    cfg.mutation_std = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(InitPopulation, SizeBoundsAndDeterminism) {
    GaConfig cfg;
    Rng a(3), b(3);
    const auto pa = init_population(cfg, a);
    const auto pb = init_population(cfg, b);
    ASSERT_EQ(pa.size(), 20u);
    for (std::size_t i = 0; i < pa.size(); ++i) {
        EXPECT_GE(pa[i].w_hypo, 1.0);
        EXPECT_LE(pa[i].w_hypo, 10.0);
        EXPECT_GE(pa[i].w_hyper, 1.0);
        EXPECT_LE(pa[i].w_hyper, 10.0);
        EXPECT_FALSE(pa[i].fitness.has_value());
        EXPECT_EQ(pa[i].w_hypo, pb[i].w_hypo);
        EXPECT_EQ(pa[i].w_hyper, pb[i].w_hyper);
    }
}

TEST(SelectParents, RanksAndTieBreaks) {
    auto sel = select_parents(with_fitness({5, 1, 3, 2}));
    ASSERT_EQ(sel.size(), 2u);
    EXPECT_EQ(*sel[0].fitness, 1.0);
    EXPECT_EQ(*sel[1].fitness, 2.0);

    sel = select_parents(with_fitness({2, 2, 9, 9}));
    EXPECT_EQ(sel[0].w_hypo, 1.0);
    EXPECT_EQ(sel[1].w_hypo, 2.0);

    sel = select_parents(with_fitness({4, 4, 4, 4, 4, 4}));
    ASSERT_EQ(sel.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(sel[i].w_hypo, static_cast<double>(i + 1));

    auto pop = with_fitness({1, 2});
    pop[1].fitness.reset();
    EXPECT_THROW(select_parents(pop), StateError);
}

TEST(Breed, MeanOfTwoParentsWithoutNoise) {
    GaConfig cfg;
    cfg.population = 4;
    cfg.mutation_std = 0.0;
    const std::vector<Individual> parents{{2, 4, 1.0}, {4, 6, 2.0}};
    Rng rng(1);
    const auto kids = breed(parents, rng, cfg);
    ASSERT_EQ(kids.size(), 2u);
    for (const auto& k : kids) {
        EXPECT_EQ(k.w_hypo, 3.0);
        EXPECT_EQ(k.w_hyper, 5.0);
        EXPECT_FALSE(k.fitness.has_value());
    }
    EXPECT_THROW(breed(std::span(parents).first(1), rng, cfg), StateError);
}

TEST(Breed, ClipsToBounds) {
    GaConfig cfg;
    cfg.population = 4;
    cfg.mutation_std = 0.0;
    const std::vector<Individual> high{{10.7, 0.4, 1.0}, {10.7, 0.4, 1.0}};
    Rng rng(2);
    for (const auto& k : breed(high, rng, cfg)) {
        EXPECT_EQ(k.w_hypo, 10.0);
        EXPECT_EQ(k.w_hyper, 1.0);
    }
    cfg.mutation_std = 5.0;
    const std::vector<Individual> parents{{1, 10, 1.0}, {10, 1, 1.0}, {5, 5, 1.0}};
    for (int i = 0; i < 200; ++i) {
        for (const auto& k : breed(parents, rng, cfg)) {
            EXPECT_GE(k.w_hypo, 1.0);
            EXPECT_LE(k.w_hypo, 10.0);
            EXPECT_GE(k.w_hyper, 1.0);
            EXPECT_LE(k.w_hyper, 10.0);
        }
    }
}

TEST(RunGa, SurrogateConvergesWithMonotoneTrace) {
    std::vector<double> distances;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        GaConfig cfg;
        cfg.seed = seed;
        const auto r = run_ga(cfg, surrogate_fitness);
        ASSERT_EQ(r.log.size(), 25u);
        EXPECT_EQ(r.evaluations, 20u + 25u * 10u);
        for (std::size_t g = 1; g < r.log.size(); ++g) {
            EXPECT_LE(*r.log[g].best.fitness, *r.log[g - 1].best.fitness);
            EXPECT_EQ(r.log[g].generation, g + 1);
        }
        distances.push_back(std::hypot(r.best.w_hypo - 3.0, r.best.w_hyper - 2.0));
    }
    std::sort(distances.begin(), distances.end());
    EXPECT_LT(distances[2], 0.25);
}

TEST(RunGa, DeterministicAndIndependentOfParallelism) {
    GaConfig cfg;
    cfg.seed = 17;
    cfg.generations = 5;
    cfg.parallel = false;
    const auto a = run_ga(cfg, surrogate_fitness);
    cfg.parallel = true;
    const auto b = run_ga(cfg, surrogate_fitness);
    ASSERT_EQ(a.log.size(), b.log.size());
    for (std::size_t g = 0; g < a.log.size(); ++g) {
        EXPECT_EQ(a.log[g].best.w_hypo, b.log[g].best.w_hypo);
        EXPECT_EQ(a.log[g].mean_fitness, b.log[g].mean_fitness);
    }
}

TEST(RunGa, SingleGenerationBestOfInitialAndChildren) {
    GaConfig cfg;
    cfg.generations = 1;
    cfg.seed = 4;
    cfg.parallel = false;
    std::vector<double> seen;
    const auto r = run_ga(cfg, [&](const Individual& ind) {
        seen.push_back(surrogate_fitness(ind));
        return seen.back();
    });
    ASSERT_EQ(seen.size(), 30u);
    EXPECT_EQ(r.evaluations, 30u);
    EXPECT_EQ(*r.best.fitness, *std::min_element(seen.begin(), seen.end()));
}

TEST(RunGa, FailingFitnessIsCulled) {
    GaConfig cfg;
    cfg.generations = 3;
    const auto r = run_ga(cfg, [](const Individual& ind) -> double {
        if (ind.w_hypo > 5.0) throw NumericError("diverged");
        if (ind.w_hyper > 8.0) return std::nan("");
        return surrogate_fitness(ind);
    });
    EXPECT_LE(r.best.w_hypo, 5.0);
    EXPECT_TRUE(std::isfinite(*r.best.fitness));
    for (const auto& g : r.log) EXPECT_TRUE(std::isfinite(g.mean_fitness));
}

TEST(TrainingFitness, DeterministicPerIndividual) {
    const auto arch = fixtures::tiny_arch();
    const auto tr = fixtures::random_windows(arch, 40, 1);
    const auto va = fixtures::random_windows(arch, 10, 2);
    nn::TrainConfig budget;
    budget.epochs = 2;
    budget.batch_size = 8;
    const auto fit = make_training_fitness(tr, va, arch, budget, {});
    const Individual ind{3.0, 2.0, std::nullopt};
    const double a = fit(ind);
    EXPECT_EQ(a, fit(ind));
    EXPECT_GT(a, 0.0);
    EXPECT_NE(a, fit(Individual{9.0, 1.0, std::nullopt}));
}

TEST(AverageWeights, CoordinateMeans) {
    EXPECT_EQ(average_weights(std::vector<Individual>{{3, 2, {}}, {4, 3, {}}}), std::make_pair(3.5, 2.5));
    EXPECT_EQ(average_weights(std::vector<Individual>{{7, 8, {}}}), std::make_pair(7.0, 8.0));
    EXPECT_EQ(average_weights(std::vector<Individual>{{1, 1, {}}, {10, 10, {}}}), std::make_pair(5.5, 5.5));
    EXPECT_THROW(average_weights(std::vector<Individual>{}), DomainError);
}

TEST(GaLog, CsvLayout) {
    GaConfig cfg;
    cfg.generations = 3;
    const auto r = run_ga(cfg, surrogate_fitness);
    std::ostringstream out;
    write_log_csv(out, r.log);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "generation,best_w_hypo,best_w_hyper,best_fitness,mean_fitness");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 3);
}

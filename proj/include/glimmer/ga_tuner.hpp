#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "glimmer/cgm_data.hpp"
#include "glimmer/nn/arch.hpp"
#include "glimmer/nn/train.hpp"
#include "glimmer/random.hpp"

namespace glimmer::ga {

struct Bounds {
    double low = 1.0;
    double high = 10.0;
};

struct GaConfig {
    std::size_t population = 20;
    std::size_t generations = 25;
    Bounds bounds;
    double mutation_std = 0.5;
    std::uint64_t seed = 0;
    bool parallel = true;  // evaluate a generation's new individuals concurrently

    void validate() const;
};

struct Individual {
    double w_hypo = 1.0;
    double w_hyper = 1.0;
    std::optional<double> fitness;  // validation RMSE, mg/dL; lower is better
};

// Must be a pure function of the individual's weights.
using FitnessFn = std::function<double(const Individual&)>;

std::vector<Individual> init_population(const GaConfig& cfg, Rng& rng);

// Top half by ascending fitness; stable, so ties keep their original order.
std::vector<Individual> select_parents(std::span<const Individual> population);

// population/2 children: mean of two distinct random parents plus N(0, mutation_std) per coordinate,
// clipped to bounds. mutation_std = 0 yields the plain mean.
std::vector<Individual> breed(std::span<const Individual> parents, Rng& rng, const GaConfig& cfg);

struct GenerationLog {
    std::size_t generation = 0;  // 1-based
    Individual best;             // best individual ever evaluated, as of this generation
    double mean_fitness = 0.0;   // over finite fitness values of the current population
};

struct GaResult {
    Individual best;
    std::vector<GenerationLog> log;
    std::size_t evaluations = 0;
};

// Evaluates the initial population, then for each generation selects parents, breeds children,
// evaluates them and forms the next population from parents and children.
GaResult run_ga(const GaConfig& cfg, const FitnessFn& fitness);

// Analytic stand-in for harness tests: squared distance to (3, 2).
double surrogate_fitness(const Individual& ind);

// Trains a model with the individual's region weights and scores RMSE on the validation windows.
// Windows must already be scaled.
FitnessFn make_training_fitness(std::span<const data::WindowSample> train_set,
                                std::span<const data::WindowSample> val_set, nn::ArchConfig arch,
                                nn::TrainConfig budget, data::Thresholds thresholds);

std::pair<double, double> average_weights(std::span<const Individual> per_patient_best);

// generation,best_w_hypo,best_w_hyper,best_fitness,mean_fitness
void write_log_csv(std::ostream& out, std::span<const GenerationLog> log);

}  // namespace glimmer::ga

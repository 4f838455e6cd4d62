#include "glimmer/ga_tuner.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <ostream>

#include "glimmer/error.hpp"
#include "glimmer/glyco_eval.hpp"
#include "glimmer/nn/batch.hpp"

namespace glimmer::ga {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double score(const FitnessFn& fitness, const Individual& ind) {
    try {
        const double f = fitness(ind);
        return std::isnan(f) ? kInf : f;
    } catch (const NumericError&) {
        return kInf;
    }
}

// Fills in missing fitness values; results land by index so scheduling does not matter.
std::size_t evaluate(std::vector<Individual>& pop, const FitnessFn& fitness, bool parallel) {
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < pop.size(); ++i) {
        if (!pop[i].fitness) pending.push_back(i);
    }
    std::exception_ptr error;
    const auto n = static_cast<long>(pending.size());
#pragma omp parallel for schedule(dynamic, 1) if (parallel)
    for (long k = 0; k < n; ++k) {
        try {
            auto& ind = pop[pending[static_cast<std::size_t>(k)]];
            ind.fitness = score(fitness, ind);
        } catch (...) {
#pragma omp critical(glimmer_ga_error)
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
    return pending.size();
}

bool better(const Individual& a, const Individual& b) { return *a.fitness < *b.fitness; }

}  // namespace

void GaConfig::validate() const {
    if (population < 2 || population % 2 != 0) throw ConfigError("GA population must be even and at least 2");
    if (generations == 0) throw ConfigError("GA needs at least one generation");
    if (!(bounds.low < bounds.high)) throw ConfigError("GA bounds must satisfy low < high");
    if (!(mutation_std > 0.0)) throw ConfigError("GA mutation_std must be positive");
}

std::vector<Individual> init_population(const GaConfig& cfg, Rng& rng) {
    std::vector<Individual> pop(cfg.population);
    for (auto& ind : pop) {
        ind.w_hypo = rng.uniform(cfg.bounds.low, cfg.bounds.high);
        ind.w_hyper = rng.uniform(cfg.bounds.low, cfg.bounds.high);
    }
    return pop;
}

std::vector<Individual> select_parents(std::span<const Individual> population) {
    for (const auto& ind : population) {
        if (!ind.fitness) throw StateError("cannot select parents from unevaluated individuals");
    }
    std::vector<Individual> sorted(population.begin(), population.end());
    std::stable_sort(sorted.begin(), sorted.end(), better);
    sorted.resize(population.size() / 2);
    return sorted;
}

std::vector<Individual> breed(std::span<const Individual> parents, Rng& rng, const GaConfig& cfg) {
    if (parents.size() < 2) throw StateError("breeding needs at least two parents");
    std::vector<Individual> children(parents.size());
    for (auto& child : children) {
        const std::size_t a = rng.index(parents.size());
        std::size_t b = rng.index(parents.size() - 1);
        if (b >= a) ++b;
        double hypo = 0.5 * (parents[a].w_hypo + parents[b].w_hypo);
        double hyper = 0.5 * (parents[a].w_hyper + parents[b].w_hyper);
        if (cfg.mutation_std > 0.0) {
            hypo += rng.normal(0.0, cfg.mutation_std);
            hyper += rng.normal(0.0, cfg.mutation_std);
        }
        child.w_hypo = std::clamp(hypo, cfg.bounds.low, cfg.bounds.high);
        child.w_hyper = std::clamp(hyper, cfg.bounds.low, cfg.bounds.high);
        child.fitness.reset();
    }
    return children;
}

GaResult run_ga(const GaConfig& cfg, const FitnessFn& fitness) {
    cfg.validate();
    Rng rng(cfg.seed);
    GaResult result;
    auto population = init_population(cfg, rng);
    result.evaluations += evaluate(population, fitness, cfg.parallel);
    result.best = *std::min_element(population.begin(), population.end(), better);

    for (std::size_t gen = 1; gen <= cfg.generations; ++gen) {
        auto parents = select_parents(population);
        auto children = breed(parents, rng, cfg);
        result.evaluations += evaluate(children, fitness, cfg.parallel);

        population = std::move(parents);
        population.insert(population.end(), children.begin(), children.end());

        double sum = 0.0;
        std::size_t finite = 0;
        for (const auto& ind : population) {
            if (better(ind, result.best)) result.best = ind;
            if (std::isfinite(*ind.fitness)) {
                sum += *ind.fitness;
                ++finite;
            }
        }
        result.log.push_back({gen, result.best, finite > 0 ? sum / static_cast<double>(finite) : kInf});
    }
    return result;
}

double surrogate_fitness(const Individual& ind) {
    const double a = ind.w_hypo - 3.0;
    const double b = ind.w_hyper - 2.0;
    return a * a + b * b;
}

FitnessFn make_training_fitness(std::span<const data::WindowSample> train_set,
                                std::span<const data::WindowSample> val_set, nn::ArchConfig arch,
                                nn::TrainConfig budget, data::Thresholds thresholds) {
    return [train_set, val_set, arch = std::move(arch), budget, thresholds](const Individual& ind) {
        const loss::WeightedRegionLoss loss_fn({ind.w_hypo, 1.0, ind.w_hyper}, thresholds);
        const auto trained = nn::train(train_set, val_set, arch, budget, loss_fn);
        const Matrix preds = nn::predict_batch(trained.params, val_set, budget.execution);
        std::vector<double> truth;
        for (const auto& w : val_set) truth.insert(truth.end(), w.y.begin(), w.y.end());
        return eval::rmse(truth, preds.data());
    };
}

std::pair<double, double> average_weights(std::span<const Individual> per_patient_best) {
    if (per_patient_best.empty()) throw DomainError("cannot average an empty set of weights");
    double hypo = 0.0;
    double hyper = 0.0;
    for (const auto& ind : per_patient_best) {
        hypo += ind.w_hypo;
        hyper += ind.w_hyper;
    }
    const auto n = static_cast<double>(per_patient_best.size());
    return {hypo / n, hyper / n};
}

void write_log_csv(std::ostream& out, std::span<const GenerationLog> log) {
    out << "generation,best_w_hypo,best_w_hyper,best_fitness,mean_fitness\n";
    out << std::setprecision(17);
    for (const auto& row : log) {
        out << row.generation << ',' << row.best.w_hypo << ',' << row.best.w_hyper << ','
            << row.best.fitness.value_or(kInf) << ',' << row.mean_fitness << '\n';
    }
}

}  // namespace glimmer::ga

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "glimmer/cgm_data.hpp"
#include "glimmer/matrix.hpp"

namespace glimmer::eval {

double rmse(std::span<const double> truth, std::span<const double> pred);
double mae(std::span<const double> truth, std::span<const double> pred);

struct ErrorMetrics {
    double rmse = 0.0;
    double mae = 0.0;
    std::size_t count = 0;
};

// Slices by the region of the true value; a slice with no members is nullopt.
struct RegionSlices {
    std::optional<ErrorMetrics> normal;
    std::optional<ErrorMetrics> dysglycemia;  // hypo and hyper pairs pooled
    std::optional<ErrorMetrics> hyper;
    std::optional<ErrorMetrics> hypo;
};

RegionSlices region_slice_metrics(std::span<const double> truth, std::span<const double> pred,
                                  const data::Thresholds& t);

enum class EventClass { Dysglycemia, Hyper, Hypo, Normal };
inline constexpr std::array<EventClass, 4> kEventClasses{EventClass::Dysglycemia, EventClass::Hyper, EventClass::Hypo,
                                                         EventClass::Normal};
std::string to_string(EventClass c);

struct RegionSet {
    bool hypo = false;
    bool normal = false;
    bool hyper = false;

    bool contains(data::Region r) const;
    static RegionSet of(EventClass c);
};

// Zero denominators produce 0 and set the matching *_undefined flag.
struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    bool precision_undefined = false;
    bool recall_undefined = false;
    bool f1_undefined = false;
};

// A sample is positive when its region (from truth for actual, from pred for predicted) is in target.
ClassMetrics classification_metrics(std::span<const double> truth, std::span<const double> pred,
                                    const data::Thresholds& t, RegionSet target);

enum class ClarkeZone { A = 0, B, C, D, E };
char zone_letter(ClarkeZone z);

// Clarke (1987) boundaries, first match wins in the order A, E, C, D, B.
ClarkeZone clarke_zone(double ref, double pred);

using ZonePercentages = std::array<double, 5>;

// Percent of pairs per zone A..E; the largest zone absorbs rounding so the total is 100.
ZonePercentages ceg_summary(std::span<const double> truth, std::span<const double> pred);

struct SeedMetrics {
    std::uint64_t seed = 0;
    ErrorMetrics overall;
    RegionSlices regions;
    std::array<ClassMetrics, 4> classes;  // indexed like kEventClasses
    ZonePercentages ceg{};
};

SeedMetrics compute_metrics(std::span<const double> truth, std::span<const double> pred, const data::Thresholds& t,
                            std::uint64_t seed = 0);

struct MetricSummary {
    std::string name;
    std::vector<std::optional<double>> per_seed;
    std::optional<double> mean;  // over seeds where the metric exists
    double std = 0.0;            // sample standard deviation; 0 for a single seed
    bool undefined = false;      // some seed hit a zero denominator
};

struct EvalReport {
    std::vector<std::uint64_t> seeds;
    std::size_t n_samples = 0;  // scalar (window, horizon step) pairs per seed
    std::vector<SeedMetrics> per_seed;

    std::vector<MetricSummary> summary() const;
};

// Maps raw test windows to an (n x horizon) prediction matrix.
using Predictor = std::function<Matrix(std::span<const data::WindowSample>)>;

// One predictor per seed. Every (window, horizon step) pair counts as one scalar sample.
EvalReport evaluate(std::span<const Predictor> models, std::span<const data::WindowSample> test,
                    const data::Thresholds& t, std::span<const std::uint64_t> seeds);

// Concatenated targets of the windows, row-major by window.
std::vector<double> flatten_targets(std::span<const data::WindowSample> windows);

void write_report_json(std::ostream& out, const EvalReport& report);
// metric,mean,std,n_seeds,undefined,per_seed (per-seed values separated by ';')
void write_report_csv(std::ostream& out, const EvalReport& report);
// ref,pred,zone; predictions below 1 mg/dL are written and zoned as 1, as in compute_metrics.
void write_ceg_pairs_csv(std::ostream& out, std::span<const double> truth, std::span<const double> pred);

}  // namespace glimmer::eval

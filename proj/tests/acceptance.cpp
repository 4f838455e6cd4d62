// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and exits non-zero if any fail.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "glimmer/cgm_data.hpp"
#include "glimmer/cli.hpp"
#include "glimmer/ga_tuner.hpp"
#include "glimmer/glyco_eval.hpp"
#include "glimmer/nn/batch.hpp"
#include "glimmer/nn/train.hpp"
#include "glimmer/region_loss.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace glimmer;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* pattern, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, pattern, args...);
    return buf;
}

Outcome gradient_fidelity() {
    const Stopwatch clock;
    const auto arch = fixtures::tiny_arch();
    const auto batch = fixtures::random_windows(arch, 5, 77);
    Rng rng(2024);
    const auto params = nn::init_params(arch, rng, 150.0);
    const loss::MeanAbsoluteError plain;
    const loss::WeightedRegionLoss weighted(loss::kPublishedWeights, data::Thresholds{});

    bool ok = true;
    std::string detail;
    for (const loss::LossFunction* fn : {static_cast<const loss::LossFunction*>(&plain),
                                         static_cast<const loss::LossFunction*>(&weighted)}) {
        const auto r = oracle::finite_difference_check(params, batch, *fn);
        ok = ok && r.max_rel_error < 1e-4 && r.checked > 0;
        detail += fmt("%s max rel err %.2e (%zu checked, %zu kink-adjacent); ", fn->name().c_str(), r.max_rel_error,
                      r.checked, r.excluded);
    }
    const double t = clock.seconds();
    return {ok && t < 30.0, detail + fmt("%.1f s", t)};
}

Outcome loss_correctness() {
    const data::Thresholds th;
    const std::vector<double> truth{60, 100, 200};
    const std::vector<double> pred{70, 110, 190};
    const double fixture = loss::weighted_region_loss(pred, truth, loss::kPublishedWeights, th).value;
    bool ok = std::fabs(fixture - 66.78) <= 1e-9;

    // Unit weights on single-region data reduce to the plain mean absolute error.
    Rng rng(12);
    double worst = 0.0;
    const loss::MeanAbsoluteError plain;
    const std::array<std::pair<double, double>, 3> bands{{{20, 69}, {70, 180}, {181, 450}}};
    for (int trial = 0; trial < 300; ++trial) {
        const auto [lo, hi] = bands[static_cast<std::size_t>(trial) % 3];
        const std::size_t n = 1 + rng.index(60);
        std::vector<double> t(n), p(n), grad(n);
        for (auto& v : t) v = rng.uniform(lo, hi);
        for (auto& v : p) v = rng.uniform(1, 500);
        const double weighted = loss::weighted_region_loss(p, t, {1.0, 1.0, 1.0}, th).value;
        double direct = 0.0;
        for (std::size_t i = 0; i < n; ++i) direct += std::fabs(t[i] - p[i]);
        direct /= static_cast<double>(n);
        worst = std::max({worst, std::fabs(weighted - direct), std::fabs(weighted - plain.evaluate(p, t, grad))});
    }
    ok = ok && worst <= 1e-12;
    return {ok, fmt("fixture %.12f; unit-weight single-region max |diff| vs MAE %.1e", fixture, worst)};
}

Outcome ga_harness() {
    const Stopwatch clock;
    std::vector<double> distances;
    bool monotone = true;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        ga::GaConfig cfg;
        cfg.seed = seed;
        const auto r = ga::run_ga(cfg, ga::surrogate_fitness);
        distances.push_back(std::hypot(r.best.w_hypo - 3.0, r.best.w_hyper - 2.0));
        for (std::size_t g = 1; g < r.log.size(); ++g) {
            monotone = monotone && *r.log[g].best.fitness <= *r.log[g - 1].best.fitness;
        }
    }
    std::sort(distances.begin(), distances.end());
    const double median = distances[2];
    const double t = clock.seconds();
    return {median <= 0.25 && monotone && t < 5.0,
            fmt("median distance to (3,2) %.4f; best-so-far trace %s; %.2f s", median,
                monotone ? "non-increasing" : "INCREASES", t)};
}

bool same_class(const eval::ClassMetrics& m, const oracle::Confusion& o) {
    return m.precision == o.precision && m.recall == o.recall && m.f1 == o.f1 &&
           m.precision_undefined == o.precision_undefined && m.recall_undefined == o.recall_undefined &&
           m.f1_undefined == o.f1_undefined;
}

std::array<bool, 4> oracle_target(eval::EventClass c) {
    switch (c) {
        case eval::EventClass::Dysglycemia: return {false, true, false, true};
        case eval::EventClass::Hyper: return {false, false, false, true};
        case eval::EventClass::Hypo: return {false, true, false, false};
        case eval::EventClass::Normal: return {false, false, true, false};
    }
    return {};
}

Outcome metric_oracles() {
    const data::Thresholds th;
    Rng rng(50);
    std::vector<double> t(50), p(50);
    for (std::size_t i = 0; i < 50; ++i) {
        t[i] = std::round(rng.uniform(45, 320));
        p[i] = std::max(std::round(t[i] + rng.normal(0, 35)), 20.0);
    }
    const auto m = eval::compute_metrics(t, p, th);
    std::vector<std::size_t> all(50), hypo, normal, hyper, dys;
    std::iota(all.begin(), all.end(), std::size_t{0});
    for (auto i : all) {
        const int r = oracle::label(t[i]);
        (r == 1 ? hypo : r == 2 ? normal : hyper).push_back(i);
        if (r != 2) dys.push_back(i);
    }
    auto same = [&](const std::optional<eval::ErrorMetrics>& got, const std::vector<std::size_t>& members) {
        const auto o = oracle::errors_over(t, p, members);
        if (members.empty()) return !got.has_value();
        return got && got->rmse == o.rmse && got->mae == o.mae && got->count == o.n;
    };
    bool fifty = same(std::optional(m.overall), all) && same(m.regions.hypo, hypo) &&
                 same(m.regions.normal, normal) && same(m.regions.hyper, hyper) &&
                 same(m.regions.dysglycemia, dys);
    for (std::size_t c = 0; c < eval::kEventClasses.size(); ++c) {
        fifty = fifty && same_class(m.classes[c], oracle::confusion(t, p, oracle_target(eval::kEventClasses[c])));
    }

    // Every (truth, prediction) labelling over three regions, for every length up to 8.
    const std::array<double, 3> representative{50.0, 120.0, 250.0};
    std::size_t instances = 0;
    bool exhaustive = true;
    for (std::size_t n = 1; n <= 8 && exhaustive; ++n) {
        std::vector<int> digits(2 * n, 0);
        std::vector<double> truth(n), pred(n);
        while (exhaustive) {
            for (std::size_t i = 0; i < n; ++i) {
                truth[i] = representative[static_cast<std::size_t>(digits[i])];
                pred[i] = representative[static_cast<std::size_t>(digits[n + i])];
            }
            for (const auto c : eval::kEventClasses) {
                const auto got = eval::classification_metrics(truth, pred, th, eval::RegionSet::of(c));
                exhaustive = exhaustive && same_class(got, oracle::confusion(truth, pred, oracle_target(c)));
            }
            ++instances;
            std::size_t k = 0;
            while (k < digits.size() && ++digits[k] == 3) digits[k++] = 0;
            if (k == digits.size()) break;
        }
    }
    return {fifty && exhaustive, fmt("50-pair fixture %s; %zu labellings x 4 classes %s", fifty ? "exact" : "MISMATCH",
                                     instances, exhaustive ? "agree" : "DISAGREE")};
}

Outcome clarke_grid() {
    struct Point {
        double ref, pred;
        char zone;
    };
    const std::vector<Point> golden{
        {100, 110, 'A'}, {50, 50, 'A'},  {40, 65, 'A'},   {200, 60, 'E'},  {60, 200, 'E'},  {100, 220, 'C'},
        {170, 50, 'C'},  {300, 150, 'D'}, {50, 100, 'D'}, {65, 85, 'D'},   {100, 150, 'B'}, {150, 100, 'B'},
    };
    std::size_t mismatches = 0;
    std::array<bool, 5> seen{};
    for (const auto& g : golden) {
        const char got = eval::zone_letter(eval::clarke_zone(g.ref, g.pred));
        if (got != g.zone || oracle::clarke(g.ref, g.pred) != g.zone) ++mismatches;
        seen[static_cast<std::size_t>(g.zone - 'A')] = true;
    }
    const bool all_zones = std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });

    std::vector<double> truth, pred;
    for (const auto& g : golden) {
        truth.push_back(g.ref);
        pred.push_back(g.pred);
    }
    const auto golden_pct = eval::ceg_summary(truth, pred);
    double worst = std::fabs(std::accumulate(golden_pct.begin(), golden_pct.end(), 0.0) - 100.0);
    Rng rng(5);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t n = 1 + rng.index(500);
        std::vector<double> t(n), p(n);
        for (auto& v : t) v = rng.uniform(20, 450);
        for (auto& v : p) v = rng.uniform(1, 500);
        const auto pct = eval::ceg_summary(t, p);
        worst = std::max(worst, std::fabs(std::accumulate(pct.begin(), pct.end(), 0.0) - 100.0));
    }
    return {mismatches == 0 && all_zones && worst <= 1e-9,
            fmt("%zu/12 golden points match library and rule table; max |sum - 100| %.1e over 2001 sets",
                golden.size() - mismatches, worst)};
}

int glimmer(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    if (code != 0) std::fprintf(stderr, "glimmer %s failed: %s", args.front().c_str(), err.str().c_str());
    return code;
}

Outcome pipeline_determinism() {
    const auto root = fixtures::scratch_dir("acceptance_determinism");
    std::vector<fs::path> dirs;
    for (const char* name : {"first", "second"}) {
        const auto dir = root / name;
        fs::create_directories(dir);
        const auto csv = (dir / "synthetic.csv").string();
        const auto ckpt = (dir / "checkpoint_seed5.json").string();
        if (glimmer({"synth", "--seed", "11", "--days", "10", "--out", csv}) != 0 ||
            glimmer({"train", "--data", csv, "--epochs", "2", "--seed", "5", "--out", dir.string()}) != 0 ||
            glimmer({"eval", "--data", csv, "--checkpoint", ckpt, "--out", dir.string()}) != 0) {
            return {false, "pipeline command failed"};
        }
        dirs.push_back(dir);
    }
    std::size_t compared = 0, differing = 0;
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
        const auto twin = dirs[1] / entry.path().filename();
        ++compared;
        if (!fs::exists(twin) || fixtures::slurp(entry.path()) != fixtures::slurp(twin)) ++differing;
    }
    const std::size_t second = static_cast<std::size_t>(
        std::distance(fs::directory_iterator(dirs[1]), fs::directory_iterator{}));
    return {differing == 0 && compared == second && compared >= 6,
            fmt("%zu output files compared, %zu differ", compared, differing)};
}

struct Comparison {
    double plain = 0.0;
    double weighted = 0.0;
    std::size_t count = 0;
};

// Trains the plain and weighted models on the same split and scores both on the test windows.
std::function<Comparison(std::uint64_t)> make_comparison(const data::PreparedData& prep, std::size_t epochs,
                                                         bool dysglycemia_only) {
    return [&prep, epochs, dysglycemia_only](std::uint64_t seed) {
        const data::Thresholds th;
        const auto train = data::apply_scaler(prep.scaler, prep.train);
        const auto val = data::apply_scaler(prep.scaler, prep.val);
        const auto test = data::apply_scaler(prep.scaler, prep.test);
        const auto truth = eval::flatten_targets(prep.test);
        const loss::MeanAbsoluteError plain;
        const loss::WeightedRegionLoss weighted(loss::kPublishedWeights, th);
        nn::TrainConfig cfg;
        cfg.epochs = epochs;
        cfg.seed = seed;

        Comparison c;
        for (const loss::LossFunction* fn : {static_cast<const loss::LossFunction*>(&plain),
                                             static_cast<const loss::LossFunction*>(&weighted)}) {
            const auto fit = nn::train(train, val, nn::ArchConfig{}, cfg, *fn);
            const auto out = nn::predict_batch(fit.params, test, nn::Execution::Parallel);
            const std::vector<double> pred(out.data().begin(), out.data().end());
            double rmse = 0.0;
            if (dysglycemia_only) {
                const auto slice = eval::region_slice_metrics(truth, pred, th).dysglycemia;
                rmse = slice ? slice->rmse : 0.0;
                c.count = slice ? slice->count : 0;
            } else {
                rmse = eval::rmse(truth, pred);
                c.count = truth.size();
            }
            (fn == &plain ? c.plain : c.weighted) = rmse;
        }
        return c;
    };
}

// Short enough that ten trainings on 60 days fit the time budget on a single core.
constexpr std::size_t kComparisonEpochs = 10;

Outcome method_effect() {
    const Stopwatch clock;
    const data::Thresholds th;
    const auto records = data::generate_synthetic(60, 60, th);
    const auto prep = data::prepare(records, std::nullopt, th);
    const auto compare = make_comparison(prep, kComparisonEpochs, true);

    std::size_t wins = 0;
    double sq_plain = 0.0, sq_weighted = 0.0;
    std::size_t pooled = 0;
    std::string per_seed;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto c = compare(seed);
        if (c.count == 0) return {false, "test split has no dysglycemic targets"};
        wins += c.weighted <= c.plain;
        sq_plain += c.plain * c.plain * static_cast<double>(c.count);
        sq_weighted += c.weighted * c.weighted * static_cast<double>(c.count);
        pooled += c.count;
        per_seed += fmt(" %.2f/%.2f", c.weighted, c.plain);
    }
    const double pooled_plain = std::sqrt(sq_plain / static_cast<double>(pooled));
    const double pooled_weighted = std::sqrt(sq_weighted / static_cast<double>(pooled));
    const double t = clock.seconds();
    return {wins >= 4 && pooled_weighted < pooled_plain && t < 600.0,
            fmt("dysglycemia RMSE weighted/plain per seed:%s; no worse on %zu/5; pooled %.2f vs %.2f; %.0f s",
                per_seed.c_str(), wins, pooled_weighted, pooled_plain, t)};
}

// Optional real-data check: one CSV per patient in $GLIMMER_AZT1D_DIR.
Outcome real_data_effect() {
    const char* dir = std::getenv("GLIMMER_AZT1D_DIR");
    if (dir == nullptr || !fs::is_directory(dir)) return {true, "skipped: GLIMMER_AZT1D_DIR not set"};
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".csv") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) return {true, "skipped: no CSV files in GLIMMER_AZT1D_DIR"};

    const data::Thresholds th;
    std::size_t better = 0;
    for (const auto& f : files) {
        const auto records = data::read_csv(f);
        const auto prep = data::prepare(records, std::nullopt, th);
        const auto c = make_comparison(prep, kComparisonEpochs, false)(0);
        better += c.weighted < c.plain;
    }
    const double share = static_cast<double>(better) / static_cast<double>(files.size());
    return {share >= 0.6, fmt("weighted beats plain overall RMSE on %zu/%zu patients", better, files.size())};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"gradient fidelity", gradient_fidelity},
        {"loss correctness", loss_correctness},
        {"GA harness", ga_harness},
        {"metric oracles", metric_oracles},
        {"Clarke error grid", clarke_grid},
        {"pipeline determinism", pipeline_determinism},
        {"weighted loss on dysglycemia", method_effect},
        {"real-data improvement", real_data_effect},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}

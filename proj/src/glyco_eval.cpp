#include "glimmer/glyco_eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>

#include <json.hpp>

#include "glimmer/error.hpp"

namespace glimmer::eval {
namespace {

void check_pair(std::span<const double> truth, std::span<const double> pred) {
    if (truth.size() != pred.size()) throw DomainError("truth and prediction lengths differ");
}

void check_nonempty(std::span<const double> truth, std::span<const double> pred) {
    check_pair(truth, pred);
    if (truth.empty()) throw DomainError("metric over an empty sample");
}

struct Accumulator {
    double sq = 0.0;
    double abs = 0.0;
    std::size_t n = 0;

    void add(double err) {
        sq += err * err;
        abs += std::abs(err);
        ++n;
    }
    std::optional<ErrorMetrics> result() const {
        if (n == 0) return std::nullopt;
        const auto count = static_cast<double>(n);
        return ErrorMetrics{std::sqrt(sq / count), abs / count, n};
    }
};

std::string format_number(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace

double rmse(std::span<const double> truth, std::span<const double> pred) {
    check_nonempty(truth, pred);
    double sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double e = truth[i] - pred[i];
        sum += e * e;
    }
    return std::sqrt(sum / static_cast<double>(truth.size()));
}

double mae(std::span<const double> truth, std::span<const double> pred) {
    check_nonempty(truth, pred);
    double sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) sum += std::abs(truth[i] - pred[i]);
    return sum / static_cast<double>(truth.size());
}

RegionSlices region_slice_metrics(std::span<const double> truth, std::span<const double> pred,
                                  const data::Thresholds& t) {
    check_pair(truth, pred);
    Accumulator hypo, normal, hyper, dys;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double e = truth[i] - pred[i];
        switch (data::classify_region(truth[i], t)) {
            case data::Region::Hypo:
                hypo.add(e);
                dys.add(e);
                break;
            case data::Region::Normal:
                normal.add(e);
                break;
            case data::Region::Hyper:
                hyper.add(e);
                dys.add(e);
                break;
        }
    }
    return {normal.result(), dys.result(), hyper.result(), hypo.result()};
}

std::string to_string(EventClass c) {
    switch (c) {
        case EventClass::Dysglycemia: return "dysglycemia";
        case EventClass::Hyper: return "hyper";
        case EventClass::Hypo: return "hypo";
        case EventClass::Normal: return "normal";
    }
    return "unknown";
}

bool RegionSet::contains(data::Region r) const {
    switch (r) {
        case data::Region::Hypo: return hypo;
        case data::Region::Normal: return normal;
        case data::Region::Hyper: return hyper;
    }
    return false;
}

RegionSet RegionSet::of(EventClass c) {
    switch (c) {
        case EventClass::Dysglycemia: return {true, false, true};
        case EventClass::Hyper: return {false, false, true};
        case EventClass::Hypo: return {true, false, false};
        case EventClass::Normal: return {false, true, false};
    }
    return {};
}

ClassMetrics classification_metrics(std::span<const double> truth, std::span<const double> pred,
                                    const data::Thresholds& t, RegionSet target) {
    check_pair(truth, pred);
    ClassMetrics m;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool actual = target.contains(data::classify_region(truth[i], t));
        const bool predicted = target.contains(data::classify_region(pred[i], t));
        if (actual && predicted) ++m.tp;
        else if (predicted) ++m.fp;
        else if (actual) ++m.fn;
    }
    const auto tp = static_cast<double>(m.tp);
    if (m.tp + m.fp == 0) m.precision_undefined = true;
    else m.precision = tp / static_cast<double>(m.tp + m.fp);
    if (m.tp + m.fn == 0) m.recall_undefined = true;
    else m.recall = tp / static_cast<double>(m.tp + m.fn);
    if (m.precision + m.recall == 0.0) m.f1_undefined = true;
    else m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

char zone_letter(ClarkeZone z) { return static_cast<char>('A' + static_cast<int>(z)); }

ClarkeZone clarke_zone(double ref, double pred) {
    if (!(std::isfinite(ref) && std::isfinite(pred) && ref > 0.0 && pred > 0.0)) {
        throw DomainError("Clarke zone needs positive finite glucose values");
    }
    if ((ref <= 70.0 && pred <= 70.0) || std::abs(pred - ref) <= 0.2 * ref) return ClarkeZone::A;
    if ((ref >= 180.0 && pred <= 70.0) || (ref <= 70.0 && pred >= 180.0)) return ClarkeZone::E;
    if ((ref >= 70.0 && ref <= 290.0 && pred >= ref + 110.0) ||
        (ref >= 130.0 && ref <= 180.0 && pred <= (7.0 / 5.0) * ref - 182.0)) {
        return ClarkeZone::C;
    }
    if ((ref >= 240.0 && pred >= 70.0 && pred <= 180.0) || (ref <= 175.0 / 3.0 && pred >= 70.0 && pred <= 180.0) ||
        (ref >= 175.0 / 3.0 && ref <= 70.0 && pred >= (6.0 / 5.0) * ref)) {
        return ClarkeZone::D;
    }
    return ClarkeZone::B;
}

ZonePercentages ceg_summary(std::span<const double> truth, std::span<const double> pred) {
    check_nonempty(truth, pred);
    std::array<std::size_t, 5> counts{};
    for (std::size_t i = 0; i < truth.size(); ++i) ++counts[static_cast<std::size_t>(clarke_zone(truth[i], pred[i]))];
    ZonePercentages pct{};
    const auto n = static_cast<double>(truth.size());
    const auto largest = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    double rest = 0.0;
    for (std::size_t z = 0; z < 5; ++z) {
        if (z == largest) continue;
        pct[z] = static_cast<double>(counts[z]) * 100.0 / n;
        rest += pct[z];
    }
    pct[largest] = 100.0 - rest;
    return pct;
}

SeedMetrics compute_metrics(std::span<const double> truth, std::span<const double> pred, const data::Thresholds& t,
                            std::uint64_t seed) {
    SeedMetrics m;
    m.seed = seed;
    m.overall = {rmse(truth, pred), mae(truth, pred), truth.size()};
    m.regions = region_slice_metrics(truth, pred, t);
    for (std::size_t c = 0; c < kEventClasses.size(); ++c) {
        m.classes[c] = classification_metrics(truth, pred, t, RegionSet::of(kEventClasses[c]));
    }
    // A ReLU head can emit exactly 0, outside the grid's domain; such predictions are read as 1 mg/dL.
    std::vector<double> grid_pred(pred.begin(), pred.end());
    for (auto& v : grid_pred) v = std::max(v, 1.0);
    m.ceg = ceg_summary(truth, grid_pred);
    return m;
}

std::vector<MetricSummary> EvalReport::summary() const {
    std::vector<MetricSummary> rows;
    auto add = [&](std::string name, auto&& get) {
        MetricSummary s;
        s.name = std::move(name);
        std::vector<double> present;
        for (const auto& m : per_seed) {
            bool undefined = false;
            const std::optional<double> v = get(m, undefined);
            s.undefined = s.undefined || undefined;
            s.per_seed.push_back(v);
            if (v) present.push_back(*v);
        }
        if (!present.empty()) {
            double sum = 0.0;
            for (double v : present) sum += v;
            const double mean = sum / static_cast<double>(present.size());
            double ss = 0.0;
            for (double v : present) ss += (v - mean) * (v - mean);
            s.mean = mean;
            s.std = present.size() > 1 ? std::sqrt(ss / static_cast<double>(present.size() - 1)) : 0.0;
        }
        rows.push_back(std::move(s));
    };

    add("overall.rmse", [](const SeedMetrics& m, bool&) { return std::optional(m.overall.rmse); });
    add("overall.mae", [](const SeedMetrics& m, bool&) { return std::optional(m.overall.mae); });
    const std::pair<const char*, std::optional<ErrorMetrics> RegionSlices::*> slices[] = {
        {"normal", &RegionSlices::normal},
        {"dysglycemia", &RegionSlices::dysglycemia},
        {"hyper", &RegionSlices::hyper},
        {"hypo", &RegionSlices::hypo}};
    for (const auto& [label, member] : slices) {
        add(std::string("region.") + label + ".rmse", [member](const SeedMetrics& m, bool&) {
            const auto& s = m.regions.*member;
            return s ? std::optional(s->rmse) : std::nullopt;
        });
        add(std::string("region.") + label + ".mae", [member](const SeedMetrics& m, bool&) {
            const auto& s = m.regions.*member;
            return s ? std::optional(s->mae) : std::nullopt;
        });
    }
    for (std::size_t c = 0; c < kEventClasses.size(); ++c) {
        const auto prefix = "class." + to_string(kEventClasses[c]);
        add(prefix + ".precision", [c](const SeedMetrics& m, bool& undefined) {
            undefined = m.classes[c].precision_undefined;
            return std::optional(m.classes[c].precision);
        });
        add(prefix + ".recall", [c](const SeedMetrics& m, bool& undefined) {
            undefined = m.classes[c].recall_undefined;
            return std::optional(m.classes[c].recall);
        });
        add(prefix + ".f1", [c](const SeedMetrics& m, bool& undefined) {
            undefined = m.classes[c].f1_undefined;
            return std::optional(m.classes[c].f1);
        });
    }
    for (std::size_t z = 0; z < 5; ++z) {
        add(std::string("ceg.") + zone_letter(static_cast<ClarkeZone>(z)),
            [z](const SeedMetrics& m, bool&) { return std::optional(m.ceg[z]); });
    }
    return rows;
}

std::vector<double> flatten_targets(std::span<const data::WindowSample> windows) {
    std::vector<double> out;
    for (const auto& w : windows) out.insert(out.end(), w.y.begin(), w.y.end());
    return out;
}

EvalReport evaluate(std::span<const Predictor> models, std::span<const data::WindowSample> test,
                    const data::Thresholds& t, std::span<const std::uint64_t> seeds) {
    if (models.size() != seeds.size() || models.empty()) {
        throw DomainError("evaluation needs one model per seed");
    }
    if (test.empty()) throw DataError("no test windows to evaluate");
    const auto truth = flatten_targets(test);
    EvalReport report;
    report.seeds.assign(seeds.begin(), seeds.end());
    report.n_samples = truth.size();
    for (std::size_t s = 0; s < models.size(); ++s) {
        const Matrix preds = models[s](test);
        if (preds.size() != truth.size()) throw ShapeError("predictor output does not match the test targets");
        report.per_seed.push_back(compute_metrics(truth, preds.data(), t, seeds[s]));
    }
    return report;
}

void write_report_json(std::ostream& out, const EvalReport& report) {
    using nlohmann::json;
    json metrics = json::object();
    for (const auto& s : report.summary()) {
        json per_seed = json::array();
        for (const auto& v : s.per_seed) per_seed.push_back(v ? json(*v) : json(nullptr));
        metrics[s.name] = {{"mean", s.mean ? json(*s.mean) : json(nullptr)},
                           {"std", s.std},
                           {"per_seed", per_seed},
                           {"undefined", s.undefined}};
    }
    json seeds = json::array();
    for (auto seed : report.seeds) seeds.push_back(seed);
    const json doc = {{"n_samples", report.n_samples}, {"seeds", seeds}, {"metrics", metrics}};
    out << doc.dump(2) << '\n';
}

void write_report_csv(std::ostream& out, const EvalReport& report) {
    out << "metric,mean,std,n_seeds,undefined,per_seed\n";
    for (const auto& s : report.summary()) {
        out << s.name << ',' << (s.mean ? format_number(*s.mean) : "") << ',' << format_number(s.std) << ','
            << s.per_seed.size() << ',' << (s.undefined ? 1 : 0) << ',';
        for (std::size_t i = 0; i < s.per_seed.size(); ++i) {
            if (i > 0) out << ';';
            if (s.per_seed[i]) out << format_number(*s.per_seed[i]);
        }
        out << '\n';
    }
}

void write_ceg_pairs_csv(std::ostream& out, std::span<const double> truth, std::span<const double> pred) {
    check_pair(truth, pred);
    out << "ref,pred,zone\n";
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double p = std::max(pred[i], 1.0);
        out << format_number(truth[i]) << ',' << format_number(p) << ',' << zone_letter(clarke_zone(truth[i], p)) << '\n';
    }
}

}  // namespace glimmer::eval

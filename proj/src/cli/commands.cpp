#include "glimmer/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <istream>
#include <ostream>
#include <sstream>

#include <omp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "glimmer/cgm_data.hpp"
#include "glimmer/error.hpp"
#include "glimmer/ga_tuner.hpp"
#include "glimmer/glyco_eval.hpp"
#include "glimmer/nn/checkpoint.hpp"
#include "glimmer/nn/forecaster.hpp"
#include "glimmer/nn/train.hpp"

namespace glimmer::cli {
namespace {

namespace fs = std::filesystem;

struct DataOptions {
    std::string data;
    std::string test_data;
    std::string glob;
    double train_fraction = 0.8;
    double hypo = 70.0;
    double hyper = 180.0;
    bool pooled = false;

    data::Thresholds thresholds() const { return {hypo, hyper}; }
};

struct ModelOptions {
    std::string conv = "32:4,16:4,8:4";
    std::size_t lstm_units = 8;
    std::size_t dense_hidden = 0;
    std::size_t epochs = 30;
    std::size_t batch_size = 48;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    std::size_t repeats = 1;
    std::string loss = "plain";
    double w_hypo = loss::kPublishedWeights.hypo;
    double w_hyper = loss::kPublishedWeights.hyper;
};

struct GaOptions {
    std::size_t population = 20;
    std::size_t generations = 25;
    double mutation_std = 0.5;
    std::size_t fitness_epochs = 5;
    bool surrogate = false;
    bool retrain = false;
};

std::string number(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::vector<nn::ConvSpec> parse_conv(const std::string& text) {
    std::vector<nn::ConvSpec> layers;
    if (text.empty() || text == "none") return layers;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        try {
            if (colon == std::string::npos) throw std::invalid_argument(item);
            layers.push_back({std::stoul(item.substr(0, colon)), std::stoul(item.substr(colon + 1))});
        } catch (const std::exception&) {
            throw ConfigError("--conv expects filters:kernel pairs, got '" + item + "'");
        }
    }
    return layers;
}

nn::ArchConfig make_arch(const ModelOptions& m) {
    nn::ArchConfig arch;
    arch.conv_layers = parse_conv(m.conv);
    arch.lstm_units = m.lstm_units;
    arch.dense_hidden = m.dense_hidden;
    try {
        arch.validate();
    } catch (const ShapeError& e) {
        throw ConfigError(e.what());
    }
    return arch;
}

nn::TrainConfig make_train_config(const ModelOptions& m, std::uint64_t seed) {
    nn::TrainConfig cfg;
    cfg.batch_size = m.batch_size;
    cfg.epochs = m.epochs;
    cfg.learning_rate = m.learning_rate;
    cfg.seed = seed;
    cfg.validate();
    return cfg;
}

std::unique_ptr<loss::LossFunction> make_loss(const ModelOptions& m, const data::Thresholds& t) {
    if (m.loss == "plain") return std::make_unique<loss::MeanAbsoluteError>();
    if (m.loss == "weighted") {
        const loss::LossWeights w{m.w_hypo, 1.0, m.w_hyper};
        try {
            return std::make_unique<loss::WeightedRegionLoss>(w, t);
        } catch (const DomainError& e) {
            throw ConfigError(e.what());
        }
    }
    throw ConfigError("--loss must be 'plain' or 'weighted'");
}

bool wildcard_match(std::string_view pattern, std::string_view name) {
    if (pattern.empty()) return name.empty();
    if (pattern.front() == '*') {
        for (std::size_t i = 0; i <= name.size(); ++i) {
            if (wildcard_match(pattern.substr(1), name.substr(i))) return true;
        }
        return false;
    }
    if (name.empty()) return false;
    if (pattern.front() != '?' && pattern.front() != name.front()) return false;
    return wildcard_match(pattern.substr(1), name.substr(1));
}

std::vector<fs::path> expand_glob(const std::string& pattern) {
    const fs::path p(pattern);
    const fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
    const std::string name = p.filename().string();
    std::vector<fs::path> matches;
    if (fs::is_directory(dir)) {
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.is_regular_file() && wildcard_match(name, entry.path().filename().string())) {
                matches.push_back(entry.path());
            }
        }
    }
    std::sort(matches.begin(), matches.end());
    if (matches.empty()) throw DataError("--glob '" + pattern + "' matches no files");
    return matches;
}

data::PreparedData load_prepared(const fs::path& data_path, const std::string& test_path, const DataOptions& d) {
    const auto records = data::read_csv(data_path);
    std::optional<std::vector<data::CgmRecord>> test_records;
    if (!test_path.empty()) test_records = data::read_csv(test_path);
    data::SplitSpec spec;
    spec.train_fraction = d.train_fraction;
    std::optional<std::span<const data::CgmRecord>> test_span;
    if (test_records) test_span = std::span<const data::CgmRecord>(*test_records);
    return data::prepare(records, test_span, d.thresholds(), spec);
}

// Test windows: the whole test file when given, otherwise the held-out tail of the data file.
std::vector<data::WindowSample> load_test_windows(const fs::path& data_path, const std::string& test_path,
                                                  const DataOptions& d, const data::Thresholds& t) {
    if (!test_path.empty()) {
        const auto records = data::read_csv(test_path);
        const auto rows = data::build_features(records, t);
        std::vector<data::Timestamp> ts;
        for (const auto& r : records) ts.push_back(r.timestamp);
        return data::make_windows(rows, ts);
    }
    const auto records = data::read_csv(data_path);
    data::SplitSpec spec;
    spec.train_fraction = d.train_fraction;
    return data::prepare(records, std::nullopt, t, spec).test;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory '" + dir.string() + "'");
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    return out;
}

void write_history(const fs::path& path, const nn::TrainResult& result) {
    auto out = open_out(path);
    out << "epoch,train_loss,val_loss\n";
    for (const auto& h : result.history) {
        out << h.epoch << ',' << number(h.train_loss) << ',' << number(h.val_loss) << '\n';
    }
}

// Trains m.repeats consecutive seeds on already-split raw windows and writes one checkpoint and history each.
void train_seeds(const data::PreparedData& prepared, const std::string& label, const fs::path& out_dir,
                 const DataOptions& d, const ModelOptions& m, std::ostream& out) {
    const auto train_set = data::apply_scaler(prepared.scaler, prepared.train);
    const auto val_set = data::apply_scaler(prepared.scaler, prepared.val);
    const auto arch = make_arch(m);
    const auto loss_fn = make_loss(m, d.thresholds());
    ensure_dir(out_dir);
    for (std::size_t r = 0; r < m.repeats; ++r) {
        const std::uint64_t seed = m.seed + r;
        const auto result = nn::train(train_set, val_set, arch, make_train_config(m, seed), *loss_fn);
        nn::Checkpoint ckpt{result.params, prepared.scaler, d.thresholds(), loss_fn->name(),
                            {m.loss == "weighted" ? m.w_hypo : 1.0, 1.0, m.loss == "weighted" ? m.w_hyper : 1.0},
                            seed};
        const auto stem = "seed" + std::to_string(seed);
        nn::save_params(ckpt, out_dir / ("checkpoint_" + stem + ".json"));
        write_history(out_dir / ("history_" + stem + ".csv"), result);
        out << label << " seed " << seed << ": best epoch " << result.best_epoch
            << ", val loss " << number(result.history[result.best_epoch - 1].val_loss) << '\n';
    }
}

void train_patient(const fs::path& data_path, const std::string& test_path, const fs::path& out_dir,
                   const DataOptions& d, const ModelOptions& m, std::ostream& out) {
    train_seeds(load_prepared(data_path, test_path, d), data_path.filename().string(), out_dir, d, m, out);
}

// One model over every patient: each file is split on its own, then the windows are merged and the
// scaler is refitted on the merged training part.
void train_pooled(const std::vector<fs::path>& files, const fs::path& out_dir, const DataOptions& d,
                  const ModelOptions& m, std::ostream& out) {
    data::PreparedData merged;
    for (const auto& file : files) {
        auto part = load_prepared(file, "", d);
        std::move(part.train.begin(), part.train.end(), std::back_inserter(merged.train));
        std::move(part.val.begin(), part.val.end(), std::back_inserter(merged.val));
    }
    merged.scaler = data::fit_scaler(merged.train);
    train_seeds(merged, "pooled (" + std::to_string(files.size()) + " files)", out_dir, d, m, out);
}

struct SeedPredictions {
    std::uint64_t seed = 0;
    std::vector<double> pred;
};

void write_reports(const fs::path& dir, const eval::EvalReport& report, std::span<const double> truth,
                   std::span<const double> first_pred) {
    ensure_dir(dir);
    auto json_out = open_out(dir / "report.json");
    eval::write_report_json(json_out, report);
    auto csv_out = open_out(dir / "report.csv");
    eval::write_report_csv(csv_out, report);
    auto pairs_out = open_out(dir / "ceg_pairs.csv");
    eval::write_ceg_pairs_csv(pairs_out, truth, first_pred);
}

eval::EvalReport report_from(std::span<const double> truth, std::span<const SeedPredictions> preds,
                             const data::Thresholds& t) {
    eval::EvalReport report;
    report.n_samples = truth.size();
    for (const auto& p : preds) {
        report.seeds.push_back(p.seed);
        report.per_seed.push_back(eval::compute_metrics(truth, p.pred, t, p.seed));
    }
    return report;
}

struct PatientEval {
    std::vector<double> truth;
    std::vector<SeedPredictions> preds;
    data::Thresholds thresholds;
};

PatientEval eval_patient(const fs::path& data_path, const std::string& test_path,
                         const std::vector<fs::path>& checkpoints, const DataOptions& d) {
    if (checkpoints.empty()) throw ConfigError("eval needs at least one checkpoint");
    std::vector<nn::Forecaster> models;
    for (const auto& c : checkpoints) models.emplace_back(nn::load_params(c));
    const auto t = models.front().checkpoint().thresholds;
    const auto arch = models.front().checkpoint().params.arch();
    for (const auto& m : models) {
        if (!(m.checkpoint().params.arch() == arch)) throw ShapeError("checkpoints disagree on architecture");
    }
    const auto test = load_test_windows(data_path, test_path, d, t);
    if (test.empty()) throw DataError("no complete test windows in '" + data_path.string() + "'");

    PatientEval pe;
    pe.thresholds = t;
    pe.truth = eval::flatten_targets(test);
    for (const auto& m : models) {
        const Matrix preds = m.predict(test);
        pe.preds.push_back({m.checkpoint().seed, std::vector<double>(preds.data().begin(), preds.data().end())});
    }
    return pe;
}

std::vector<fs::path> seed_checkpoints(const fs::path& dir) {
    std::vector<fs::path> found;
    if (fs::is_directory(dir)) {
        for (const auto& e : fs::directory_iterator(dir)) {
            const auto name = e.path().filename().string();
            if (wildcard_match("checkpoint_seed*.json", name)) found.push_back(e.path());
        }
    }
    std::sort(found.begin(), found.end());
    if (found.empty()) throw CheckpointError("no checkpoint_seed*.json files in '" + dir.string() + "'");
    return found;
}

void add_data_options(CLI::App* cmd, DataOptions& d, bool need_data) {
    auto* data_opt = cmd->add_option("--data", d.data, "CGM CSV (training file, or whole series)");
    if (need_data) data_opt->check(CLI::ExistingFile);
    cmd->add_option("--test-data", d.test_data, "Separate test CSV; the data file then splits into train/val only")
        ->check(CLI::ExistingFile);
    cmd->add_option("--glob", d.glob, "Run once per matching patient file (e.g. 'data/*.csv')");
    cmd->add_option("--train-fraction", d.train_fraction, "Chronological split ratio")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--hypo", d.hypo, "Hypoglycemia threshold, mg/dL");
    cmd->add_option("--hyper", d.hyper, "Hyperglycemia threshold, mg/dL");
}

void add_model_options(CLI::App* cmd, ModelOptions& m) {
    cmd->add_option("--conv", m.conv, "Conv stack as filters:kernel list");
    cmd->add_option("--lstm-units", m.lstm_units);
    cmd->add_option("--dense-hidden", m.dense_hidden, "Hidden dense width before the head (0 = none)");
    cmd->add_option("--epochs", m.epochs)->check(CLI::PositiveNumber);
    cmd->add_option("--batch-size", m.batch_size)->check(CLI::PositiveNumber);
    cmd->add_option("--lr", m.learning_rate)->check(CLI::PositiveNumber);
    cmd->add_option("--seed", m.seed, "Base seed");
    cmd->add_option("--repeats", m.repeats, "Number of consecutive seeds to train")->check(CLI::PositiveNumber);
    cmd->add_option("--loss", m.loss, "plain | weighted")->check(CLI::IsMember({"plain", "weighted"}));
    cmd->add_option("--w-hypo", m.w_hypo);
    cmd->add_option("--w-hyper", m.w_hyper);
}

void require_data(const DataOptions& d) {
    if (d.data.empty() && d.glob.empty()) throw ConfigError("one of --data or --glob is required");
}

int cmd_synth(std::uint64_t seed, std::size_t days, const std::string& out_path, const DataOptions& d,
              std::ostream& out) {
    const auto records = data::generate_synthetic(seed, days, d.thresholds());
    if (out_path.empty() || out_path == "-") {
        data::write_csv(out, records);
    } else {
        data::write_csv(fs::path(out_path), records);
    }
    return kSuccess;
}

int cmd_train(const DataOptions& d, const ModelOptions& m, const fs::path& out_dir, std::ostream& out) {
    require_data(d);
    if (d.pooled && d.glob.empty()) throw ConfigError("--pooled needs --glob");
    if (!d.glob.empty()) {
        const auto files = expand_glob(d.glob);
        if (d.pooled) {
            train_pooled(files, out_dir, d, m, out);
            return kSuccess;
        }
        for (const auto& file : files) train_patient(file, "", out_dir / file.stem(), d, m, out);
        return kSuccess;
    }
    train_patient(d.data, d.test_data, out_dir, d, m, out);
    return kSuccess;
}

int cmd_tune(const DataOptions& d, const ModelOptions& m, const GaOptions& g, const fs::path& out_dir,
             std::ostream& out) {
    ga::GaConfig cfg;
    cfg.population = g.population;
    cfg.generations = g.generations;
    cfg.mutation_std = g.mutation_std;
    cfg.seed = m.seed;
    try {
        cfg.validate();
    } catch (const ConfigError&) {
        throw;
    }
    ensure_dir(out_dir);

    std::optional<data::PreparedData> prepared;
    std::vector<data::WindowSample> train_set, val_set;
    ga::FitnessFn fitness = ga::surrogate_fitness;
    if (!g.surrogate) {
        if (d.data.empty()) throw ConfigError("tune needs --data unless --surrogate is set");
        prepared = load_prepared(d.data, d.test_data, d);
        train_set = data::apply_scaler(prepared->scaler, prepared->train);
        val_set = data::apply_scaler(prepared->scaler, prepared->val);
        ModelOptions budget = m;
        budget.epochs = g.fitness_epochs;
        fitness = ga::make_training_fitness(train_set, val_set, make_arch(m), make_train_config(budget, m.seed),
                                            d.thresholds());
    }

    const auto result = ga::run_ga(cfg, fitness);
    {
        auto log_out = open_out(out_dir / "ga_log.csv");
        ga::write_log_csv(log_out, result.log);
    }
    const nlohmann::json best = {{"w_hypo", result.best.w_hypo},
                                 {"w_normal", 1.0},
                                 {"w_hyper", result.best.w_hyper},
                                 {"fitness", result.best.fitness.value_or(0.0)},
                                 {"evaluations", result.evaluations},
                                 {"seed", m.seed},
                                 {"surrogate", g.surrogate}};
    open_out(out_dir / "best_weights.json") << best.dump(2) << '\n';
    out << "best w_hypo=" << number(result.best.w_hypo) << " w_hyper=" << number(result.best.w_hyper)
        << " fitness=" << number(result.best.fitness.value_or(0.0)) << '\n';

    if (g.retrain && prepared) {
        ModelOptions full = m;
        full.loss = "weighted";
        full.w_hypo = result.best.w_hypo;
        full.w_hyper = result.best.w_hyper;
        train_patient(d.data, d.test_data, out_dir, d, full, out);
    }
    return kSuccess;
}

int cmd_eval(const DataOptions& d, const std::vector<std::string>& checkpoints, const std::string& checkpoint_dir,
             const fs::path& out_dir, std::ostream& out) {
    if (!d.glob.empty()) {
        if (checkpoint_dir.empty()) throw ConfigError("--glob evaluation needs --checkpoint-dir");
        std::vector<double> pooled_truth;
        std::vector<SeedPredictions> pooled;
        data::Thresholds t;
        for (const auto& file : expand_glob(d.glob)) {
            // Per-patient models live in <dir>/<stem>/; a pooled model sits in <dir> itself.
            const auto own = fs::path(checkpoint_dir) / file.stem();
            const auto pe = eval_patient(file, "", seed_checkpoints(fs::is_directory(own) ? own : fs::path(checkpoint_dir)), d);
            write_reports(out_dir / file.stem(), report_from(pe.truth, pe.preds, pe.thresholds), pe.truth,
                          pe.preds.front().pred);
            if (pooled.empty()) {
                pooled = pe.preds;
                t = pe.thresholds;
            } else {
                if (pe.preds.size() != pooled.size()) {
                    throw DataError("patients have differing numbers of seed checkpoints");
                }
                for (std::size_t s = 0; s < pooled.size(); ++s) {
                    pooled[s].pred.insert(pooled[s].pred.end(), pe.preds[s].pred.begin(), pe.preds[s].pred.end());
                }
            }
            pooled_truth.insert(pooled_truth.end(), pe.truth.begin(), pe.truth.end());
            out << file.filename().string() << ": evaluated " << pe.preds.size() << " seed(s)\n";
        }
        write_reports(out_dir / "pooled", report_from(pooled_truth, pooled, t), pooled_truth, pooled.front().pred);
        return kSuccess;
    }

    if (d.data.empty() && d.test_data.empty()) throw ConfigError("eval needs --data or --test-data");
    std::vector<fs::path> paths(checkpoints.begin(), checkpoints.end());
    if (paths.empty() && !checkpoint_dir.empty()) paths = seed_checkpoints(checkpoint_dir);
    const auto pe = eval_patient(d.data, d.test_data, paths, d);
    const auto report = report_from(pe.truth, pe.preds, pe.thresholds);
    write_reports(out_dir, report, pe.truth, pe.preds.front().pred);
    for (const auto& s : report.summary()) {
        if (s.name == "overall.rmse" || s.name == "overall.mae") {
            out << s.name << ' ' << number(s.mean.value_or(0.0)) << " +/- " << number(s.std) << '\n';
        }
    }
    return kSuccess;
}

int cmd_predict(const std::string& checkpoint, const std::string& data_path, const std::string& out_path,
                std::ostream& out) {
    const nn::Forecaster model(nn::load_params(fs::path(checkpoint)));
    const auto& ckpt = model.checkpoint();
    const auto records = data::read_csv(data_path);
    const auto rows = data::build_features(records, ckpt.thresholds);
    std::vector<data::Timestamp> ts;
    for (const auto& r : records) ts.push_back(r.timestamp);
    data::WindowSpec spec;
    spec.in_len = ckpt.params.arch().input_len;
    spec.out_len = ckpt.params.arch().output_len;
    const auto windows = data::make_windows(rows, ts, spec);
    const Matrix preds = windows.empty() ? Matrix() : model.predict(windows);

    std::ostringstream buf;
    buf << "origin_timestamp";
    for (std::size_t k = 1; k <= spec.out_len; ++k) buf << ",pred_" << k * 5 << "min";
    buf << '\n';
    for (std::size_t i = 0; i < windows.size(); ++i) {
        buf << data::format_timestamp(windows[i].origin);
        for (double v : preds.row(i)) buf << ',' << number(v);
        buf << '\n';
    }
    if (out_path.empty() || out_path == "-") {
        out << buf.str();
    } else {
        open_out(out_path) << buf.str();
    }
    return kSuccess;
}

void apply_thread_cap() {
    if (const char* env = std::getenv("GLIMMER_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) omp_set_num_threads(n);
    }
}

// Moves tokens from `--config FILE` ahead of the explicit flags so the flags win.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
    std::vector<std::string> plain;
    std::vector<std::string> from_file;
    for (std::size_t i = 0; i < args.size(); ++i) {
        std::string path;
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw CLI::ArgumentMismatch("--config requires a file");
            path = args[++i];
        } else if (args[i].starts_with("--config=")) {
            path = args[i].substr(9);
        } else {
            plain.push_back(args[i]);
            continue;
        }
        std::ifstream in(path);
        if (!in) throw CLI::ValidationError("--config", "cannot read '" + path + "'");
        const auto tokens = config_tokens(in);
        from_file.insert(from_file.end(), tokens.begin(), tokens.end());
    }
    if (plain.empty() || from_file.empty()) return plain;
    std::vector<std::string> out{plain.front()};
    out.insert(out.end(), from_file.begin(), from_file.end());
    out.insert(out.end(), plain.begin() + 1, plain.end());
    return out;
}

}  // namespace

std::vector<std::string> config_tokens(std::istream& in) {
    std::vector<std::string> tokens;
    std::string line;
    std::size_t line_no = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw CLI::ValidationError("--config", "line " + std::to_string(line_no) + " is not 'key = value'");
        }
        auto key = trim(line.substr(0, eq));
        std::replace(key.begin(), key.end(), '_', '-');
        tokens.push_back("--" + key + "=" + trim(line.substr(eq + 1)));
    }
    return tokens;
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Glucose forecasting with region-weighted loss and GA weight tuning", "glimmer"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    DataOptions d;
    ModelOptions m;
    GaOptions g;
    std::string out_path;
    std::string out_dir = "glimmer_out";
    std::uint64_t synth_seed = 0;
    std::size_t days = 14;
    std::vector<std::string> checkpoints;
    std::string checkpoint_dir;
    std::string checkpoint;

    auto* synth = app.add_subcommand("synth", "Write a deterministic synthetic CGM series");
    synth->add_option("--seed", synth_seed);
    synth->add_option("--days", days)->check(CLI::PositiveNumber);
    synth->add_option("--out", out_path, "Output CSV ('-' for stdout)");
    synth->add_option("--hypo", d.hypo);
    synth->add_option("--hyper", d.hyper);

    auto* train = app.add_subcommand("train", "Train forecaster(s); writes checkpoints and histories");
    add_data_options(train, d, false);
    add_model_options(train, m);
    train->add_option("--out", out_dir, "Output directory");
    train->add_flag("--pooled", d.pooled, "With --glob, train one model on all files instead of one per file");

    auto* tune = app.add_subcommand("tune", "Search region weights with the genetic algorithm");
    add_data_options(tune, d, false);
    add_model_options(tune, m);
    tune->add_option("--out", out_dir, "Output directory");
    tune->add_option("--population", g.population);
    tune->add_option("--generations", g.generations)->check(CLI::PositiveNumber);
    tune->add_option("--mutation-std", g.mutation_std)->check(CLI::PositiveNumber);
    tune->add_option("--fitness-epochs", g.fitness_epochs, "Training epochs per fitness evaluation")
        ->check(CLI::PositiveNumber);
    tune->add_flag("--surrogate", g.surrogate, "Score individuals with the analytic surrogate instead of training");
    tune->add_flag("--retrain", g.retrain, "Retrain at the full budget with the winning weights");

    auto* evaluate = app.add_subcommand("eval", "Evaluate checkpoints on the test split");
    add_data_options(evaluate, d, false);
    evaluate->add_option("--checkpoint", checkpoints, "Checkpoint per seed (repeatable)")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
        ->check(CLI::ExistingFile);
    evaluate->add_option("--checkpoint-dir", checkpoint_dir, "Directory of checkpoint_seed*.json files");
    evaluate->add_option("--out", out_dir, "Output directory");

    auto* predict = app.add_subcommand("predict", "Forecast the next 60 minutes for every complete window");
    predict->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
    predict->add_option("--data", d.data)->required()->check(CLI::ExistingFile);
    predict->add_option("--out", out_path, "Output CSV ('-' for stdout)");

    try {
        auto args = expand_config(raw_args);
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return kSuccess;
        }
        err << "glimmer: " << e.what() << '\n';
        return kUsageError;
    }

    apply_thread_cap();
    try {
        try {
            d.thresholds().validate();
        } catch (const DomainError& e) {
            throw ConfigError(std::string("--hypo/--hyper: ") + e.what());
        }
        if (*synth) return cmd_synth(synth_seed, days, out_path, d, out);
        if (*train) return cmd_train(d, m, out_dir, out);
        if (*tune) return cmd_tune(d, m, g, out_dir, out);
        if (*evaluate) return cmd_eval(d, checkpoints, checkpoint_dir, out_dir, out);
        if (*predict) return cmd_predict(checkpoint, d.data, out_path, out);
    } catch (const ConfigError& e) {
        err << "glimmer: " << e.what() << '\n';
        return kUsageError;
    } catch (const NumericError& e) {
        err << "glimmer: numeric error: " << e.what() << '\n';
        return kNumericError;
    } catch (const CheckpointError& e) {
        err << "glimmer: checkpoint error: " << e.what() << '\n';
        return kCheckpointError;
    } catch (const ShapeError& e) {
        err << "glimmer: shape error: " << e.what() << '\n';
        return kCheckpointError;
    } catch (const Error& e) {
        err << "glimmer: " << e.what() << '\n';
        return kDataError;
    } catch (const std::exception& e) {
        err << "glimmer: " << e.what() << '\n';
        return kDataError;
    }
    return kUsageError;
}

}  // namespace glimmer::cli

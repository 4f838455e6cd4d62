#include "glimmer/cgm_data.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>

#include "glimmer/random.hpp"

namespace glimmer::data {
namespace {

int parse_digits(std::string_view text, std::size_t pos, std::size_t count) {
    int value = 0;
    for (std::size_t i = pos; i < pos + count; ++i) {
        const char ch = text[i];
        if (ch < '0' || ch > '9') {
            throw FormatError("malformed timestamp '" + std::string(text) + "'");
        }
        value = value * 10 + (ch - '0');
    }
    return value;
}

std::optional<double> parse_number(std::string_view cell) {
    while (!cell.empty() && cell.front() == ' ') cell.remove_prefix(1);
    while (!cell.empty() && cell.back() == ' ') cell.remove_suffix(1);
    if (cell.empty()) {
        return std::nullopt;
    }
    double value = 0.0;
    const auto* end = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(cell.data(), end, value);
    if (ec != std::errc{} || ptr != end || !std::isfinite(value)) {
        throw std::invalid_argument(std::string(cell));
    }
    return value;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

void append_number(std::string& out, double value) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    out.append(buf, ptr);
}

// Meal response kernel s * exp(1 - s); peaks at 1 when s = 1.
double response(double minutes_since, double peak_minutes) {
    if (minutes_since < 0.0) {
        return 0.0;
    }
    const double s = minutes_since / peak_minutes;
    return s * std::exp(1.0 - s);
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
    if (text.size() != 20 || text[4] != '-' || text[7] != '-' || text[10] != 'T' || text[13] != ':' ||
        text[16] != ':' || text[19] != 'Z') {
        throw FormatError("malformed timestamp '" + std::string(text) + "'");
    }
    using namespace std::chrono;
    const year_month_day ymd{year{parse_digits(text, 0, 4)},
                             month{static_cast<unsigned>(parse_digits(text, 5, 2))},
                             day{static_cast<unsigned>(parse_digits(text, 8, 2))}};
    const int hh = parse_digits(text, 11, 2);
    const int mm = parse_digits(text, 14, 2);
    const int ss = parse_digits(text, 17, 2);
    if (!ymd.ok() || hh > 23 || mm > 59 || ss > 59) {
        throw FormatError("timestamp out of range '" + std::string(text) + "'");
    }
    const auto days_since_epoch = sys_days{ymd}.time_since_epoch().count();
    return static_cast<Timestamp>(days_since_epoch) * 86400 + hh * 3600 + mm * 60 + ss;
}

std::string format_timestamp(Timestamp ts) {
    using namespace std::chrono;
    const auto day_index = static_cast<int>((ts >= 0 ? ts : ts - 86399) / 86400);
    const Timestamp secs = ts - static_cast<Timestamp>(day_index) * 86400;
    const year_month_day ymd{sys_days{days{day_index}}};
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(secs / 3600), static_cast<int>(secs % 3600 / 60), static_cast<int>(secs % 60));
    return buf;
}

void Thresholds::validate() const {
    if (!(std::isfinite(hypo) && std::isfinite(hyper) && hypo > 0.0 && hypo < hyper)) {
        throw DomainError("thresholds must satisfy 0 < hypo < hyper");
    }
}

Region classify_region(double glucose, const Thresholds& t) {
    if (!std::isfinite(glucose)) {
        throw DomainError("glucose value is not finite");
    }
    if (glucose < t.hypo) return Region::Hypo;
    if (glucose > t.hyper) return Region::Hyper;
    return Region::Normal;
}

std::vector<CgmRecord> parse_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError("empty CSV input");
    }
    if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader) {
        throw FormatError("unexpected CSV header '" + line + "', expected '" + std::string(kCsvHeader) + "'");
    }

    std::vector<CgmRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != 5) {
            throw RowError(line_no, "expected 5 fields, found " + std::to_string(fields.size()));
        }

        CgmRecord rec;
        try {
            rec.timestamp = parse_timestamp(fields[0]);
        } catch (const FormatError& e) {
            throw RowError(line_no, e.what());
        }

        std::optional<double> glucose;
        try {
            glucose = parse_number(fields[1]);
        } catch (const std::invalid_argument&) {
            throw RowError(line_no, "glucose is not numeric");
        }
        if (!glucose) throw RowError(line_no, "glucose is missing");
        if (*glucose <= 0.0) throw RowError(line_no, "glucose must be positive");
        rec.glucose = *glucose;

        static constexpr const char* kNames[] = {"basal", "bolus", "carbs"};
        double* targets[] = {&rec.basal, &rec.bolus, &rec.carbs};
        for (std::size_t k = 0; k < 3; ++k) {
            std::optional<double> value;
            try {
                value = parse_number(fields[k + 2]);
            } catch (const std::invalid_argument&) {
                throw RowError(line_no, std::string(kNames[k]) + " is not numeric");
            }
            if (value && *value < 0.0) throw RowError(line_no, std::string(kNames[k]) + " must be non-negative");
            *targets[k] = value.value_or(0.0);
        }

        if (!records.empty() && rec.timestamp <= records.back().timestamp) {
            throw OrderingError(line_no, "timestamps must be strictly increasing");
        }
        records.push_back(rec);
    }
    return records;
}

std::vector<CgmRecord> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open '" + path.string() + "'");
    }
    return parse_csv(in);
}

void write_csv(std::ostream& out, std::span<const CgmRecord> records) {
    std::string buf;
    buf.append(kCsvHeader).push_back('\n');
    for (const auto& r : records) {
        buf += format_timestamp(r.timestamp);
        for (double v : {r.glucose, r.basal, r.bolus, r.carbs}) {
            buf.push_back(',');
            append_number(buf, v);
        }
        buf.push_back('\n');
    }
    out << buf;
}

void write_csv(const std::filesystem::path& path, std::span<const CgmRecord> records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write '" + path.string() + "'");
    }
    write_csv(out, records);
    if (!out) {
        throw DataError("failed writing '" + path.string() + "'");
    }
}

std::vector<double> moving_average(std::span<const double> series, std::size_t period) {
    if (period == 0) {
        throw DomainError("moving average period must be at least 1");
    }
    std::vector<double> out(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        const std::size_t first = i + 1 >= period ? i + 1 - period : 0;
        double sum = 0.0;
        for (std::size_t j = first; j <= i; ++j) {
            sum += series[j];
        }
        out[i] = sum / static_cast<double>(i - first + 1);
    }
    return out;
}

std::vector<FeatureRow> build_features(std::span<const CgmRecord> records, const Thresholds& t) {
    std::vector<double> glucose(records.size());
    std::transform(records.begin(), records.end(), glucose.begin(), [](const CgmRecord& r) { return r.glucose; });
    const auto trend = moving_average(glucose, kMovingAveragePeriod);

    std::vector<FeatureRow> rows(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        rows[i] = {r.glucose, r.basal, r.bolus, r.carbs, trend[i],
                   static_cast<double>(static_cast<int>(classify_region(r.glucose, t)))};
    }
    return rows;
}

std::vector<WindowSample> make_windows(std::span<const FeatureRow> rows, std::span<const Timestamp> timestamps,
                                       const WindowSpec& spec) {
    if (rows.size() != timestamps.size()) {
        throw ShapeError("feature rows and timestamps differ in length");
    }
    if (spec.in_len == 0 || spec.out_len == 0 || spec.stride == 0) {
        throw DomainError("window lengths and stride must be positive");
    }
    const std::size_t total = spec.in_len + spec.out_len;
    std::vector<WindowSample> windows;

    std::size_t run_start = 0;
    for (std::size_t i = 1; i <= rows.size(); ++i) {
        const bool run_ends =
            i == rows.size() || timestamps[i] - timestamps[i - 1] > spec.gap_tolerance;
        if (!run_ends) {
            continue;
        }
        for (std::size_t start = run_start; start + total <= i; start += spec.stride) {
            WindowSample w;
            w.x = Matrix(spec.in_len, kFeatureCount);
            for (std::size_t r = 0; r < spec.in_len; ++r) {
                std::copy(rows[start + r].begin(), rows[start + r].end(), w.x.row(r).begin());
            }
            w.y.resize(spec.out_len);
            for (std::size_t k = 0; k < spec.out_len; ++k) {
                w.y[k] = rows[start + spec.in_len + k][kGlucose];
            }
            w.origin = timestamps[start + spec.in_len - 1];
            windows.push_back(std::move(w));
        }
        run_start = i;
    }
    return windows;
}

Scaler Scaler::identity() {
    Scaler s;
    s.mean.fill(0.0);
    s.std.fill(1.0);
    return s;
}

void Scaler::transform(Matrix& x) const {
    if (x.cols() != kFeatureCount) {
        throw ShapeError("scaler expects " + std::to_string(kFeatureCount) + " feature columns");
    }
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t c = 0; c < kFeatureCount; ++c) {
            x(r, c) = (x(r, c) - mean[c]) / std[c];
        }
    }
}

Scaler fit_scaler(std::span<const WindowSample> train) {
    std::size_t count = 0;
    for (const auto& w : train) count += w.x.rows();
    if (count == 0) {
        throw DataError("cannot fit scaler on an empty training set");
    }
    Scaler s;
    s.mean.fill(0.0);
    s.std.fill(0.0);
    for (const auto& w : train) {
        for (std::size_t r = 0; r < w.x.rows(); ++r) {
            for (std::size_t c = 0; c < kFeatureCount; ++c) s.mean[c] += w.x(r, c);
        }
    }
    for (auto& m : s.mean) m /= static_cast<double>(count);
    for (const auto& w : train) {
        for (std::size_t r = 0; r < w.x.rows(); ++r) {
            for (std::size_t c = 0; c < kFeatureCount; ++c) {
                const double d = w.x(r, c) - s.mean[c];
                s.std[c] += d * d;
            }
        }
    }
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
        const double sd = std::sqrt(s.std[c] / static_cast<double>(count));
        // Constant columns (up to summation rounding) keep unit scale.
        s.std[c] = sd <= 1e-12 * std::max(1.0, std::abs(s.mean[c])) ? 1.0 : sd;
    }
    return s;
}

std::vector<WindowSample> apply_scaler(const Scaler& scaler, std::span<const WindowSample> windows) {
    std::vector<WindowSample> out(windows.begin(), windows.end());
    for (auto& w : out) scaler.transform(w.x);
    return out;
}

std::vector<CgmRecord> generate_synthetic(std::uint64_t seed, std::size_t days, const Thresholds& t) {
    if (days == 0) {
        throw DomainError("synthetic series needs at least one day");
    }
    t.validate();
    constexpr Timestamp kStart = 1704067200;  // 2024-01-01T00:00:00Z
    constexpr std::size_t kPerDay = 288;
    const std::size_t n = kPerDay * days;

    struct Meal {
        std::size_t index;
        double carbs;
        double bolus;
    };
    Rng rng(seed);
    std::vector<Meal> meals;
    // Breakfast, lunch, dinner slots as [earliest, latest] minutes after midnight.
    constexpr double kSlots[3][2] = {{390.0, 510.0}, {690.0, 810.0}, {1050.0, 1170.0}};
    for (std::size_t d = 0; d < days; ++d) {
        for (const auto& slot : kSlots) {
            const auto minute = rng.uniform(slot[0], slot[1]);
            const double carbs = std::round(rng.uniform(30.0, 90.0));
            const double dose_ratio = rng.uniform(0.75, 1.25);
            const double bolus = std::round(carbs / 10.0 * dose_ratio * 10.0) / 10.0;
            meals.push_back({d * kPerDay + static_cast<std::size_t>(minute / 5.0), carbs, bolus});
        }
    }

    // Sinusoidal baseline: nadir below hypo around 03:00, peak inside the normal band at 15:00.
    const double center = 0.5 * (t.hypo + t.hyper) + 10.0;
    const double amplitude = 0.5 * (t.hyper - t.hypo) + 9.0;

    std::vector<CgmRecord> records(n);
    double drift = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double minute_of_day = static_cast<double>(i % kPerDay) * 5.0;
        const double hour = minute_of_day / 60.0;
        double g = center - amplitude * std::cos(2.0 * std::numbers::pi * (hour - 3.0) / 24.0);
        for (const auto& m : meals) {
            if (m.index > i) break;
            const double since = static_cast<double>(i - m.index) * 5.0;
            if (since > 600.0) continue;
            g += 2.4 * m.carbs * response(since, 45.0);
            g -= 11.0 * m.bolus * response(since, 90.0);
        }
        drift = 0.95 * drift + rng.normal(0.0, 2.0);
        g += drift + rng.normal(0.0, 1.5);
        g = std::clamp(g, 40.0, 400.0);

        auto& r = records[i];
        r.timestamp = kStart + static_cast<Timestamp>(i) * kSampleInterval;
        r.glucose = std::round(g * 10.0) / 10.0;
        r.basal = (hour >= 4.0 && hour < 9.0) ? 0.9 : 0.7;
    }
    for (const auto& m : meals) {
        records[m.index].carbs += m.carbs;
        records[m.index].bolus += m.bolus;
    }
    return records;
}

namespace {

struct Series {
    std::vector<FeatureRow> rows;
    std::vector<Timestamp> timestamps;
};

Series featurize(std::span<const CgmRecord> records, const Thresholds& t) {
    Series s{build_features(records, t), {}};
    s.timestamps.reserve(records.size());
    for (const auto& r : records) s.timestamps.push_back(r.timestamp);
    return s;
}

std::vector<WindowSample> windows_of(const Series& s, std::size_t begin, std::size_t end, const WindowSpec& spec) {
    return make_windows(std::span(s.rows).subspan(begin, end - begin),
                        std::span(s.timestamps).subspan(begin, end - begin), spec);
}

std::size_t head_size(std::size_t n, double fraction) {
    const auto head = static_cast<std::size_t>(fraction * static_cast<double>(n));
    if (head == 0 || head == n) {
        throw SplitError("chronological split of " + std::to_string(n) + " records leaves an empty part");
    }
    return head;
}

}  // namespace

PreparedData prepare(std::span<const CgmRecord> data, std::optional<std::span<const CgmRecord>> test_data,
                     const Thresholds& t, const SplitSpec& spec) {
    t.validate();
    PreparedData out;
    const Series main = featurize(data, t);
    std::size_t train_end = data.size();
    if (test_data) {
        const Series test = featurize(*test_data, t);
        out.test = windows_of(test, 0, test.rows.size(), spec.window);
    } else {
        train_end = head_size(data.size(), spec.train_fraction);
        out.test = windows_of(main, train_end, data.size(), spec.window);
    }
    const std::size_t fit_end = head_size(train_end, spec.train_fraction);
    out.train = windows_of(main, 0, fit_end, spec.window);
    out.val = windows_of(main, fit_end, train_end, spec.window);
    if (out.train.empty() || out.val.empty()) {
        throw SplitError("training or validation split yields no complete windows");
    }
    out.scaler = fit_scaler(out.train);
    return out;
}

}  // namespace glimmer::data

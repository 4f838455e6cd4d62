#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "glimmer/error.hpp"
#include "glimmer/matrix.hpp"

namespace glimmer::data {

// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

inline constexpr Timestamp kSampleInterval = 300;

// Parses `YYYY-MM-DDTHH:MM:SSZ`. Throws FormatError on anything else.
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp ts);

struct CgmRecord {
    Timestamp timestamp = 0;
    double glucose = 0.0;  // mg/dL
    double basal = 0.0;    // U/h
    double bolus = 0.0;    // U
    double carbs = 0.0;    // g

    bool operator==(const CgmRecord&) const = default;
};

struct Thresholds {
    double hypo = 70.0;
    double hyper = 180.0;

    void validate() const;
};

enum class Region : int { Hypo = 1, Normal = 2, Hyper = 3 };

// 1 below hypo, 2 on [hypo, hyper], 3 above hyper.
Region classify_region(double glucose, const Thresholds& t);

// Column order of a FeatureRow.
enum Feature : std::size_t {
    kGlucose = 0,
    kBasal,
    kBolus,
    kCarbs,
    kMovingAverage,
    kRegionClass,
    kFeatureCount
};

using FeatureRow = std::array<double, kFeatureCount>;

inline constexpr std::string_view kCsvHeader = "timestamp,glucose_mgdl,basal_u_per_hr,bolus_u,carbs_g";

std::vector<CgmRecord> parse_csv(std::istream& in);
std::vector<CgmRecord> read_csv(const std::filesystem::path& path);
void write_csv(std::ostream& out, std::span<const CgmRecord> records);
void write_csv(const std::filesystem::path& path, std::span<const CgmRecord> records);

// Trailing mean; the first period-1 entries use an expanding window.
std::vector<double> moving_average(std::span<const double> series, std::size_t period = 200);

inline constexpr std::size_t kMovingAveragePeriod = 200;

std::vector<FeatureRow> build_features(std::span<const CgmRecord> records, const Thresholds& t);

struct WindowSample {
    Matrix x;               // in_len x kFeatureCount
    std::vector<double> y;  // out_len raw glucose values, mg/dL
    Timestamp origin = 0;   // timestamp of the last input row
};

struct WindowSpec {
    std::size_t in_len = 72;
    std::size_t out_len = 12;
    std::size_t stride = 1;
    Timestamp gap_tolerance = 450;  // seconds; 1.5x the sampling interval
};

std::vector<WindowSample> make_windows(std::span<const FeatureRow> rows,
                                       std::span<const Timestamp> timestamps,
                                       const WindowSpec& spec = {});

// First floor(fraction * n) items, then the rest. Throws SplitError if either part is empty.
template <typename T>
std::pair<std::vector<T>, std::vector<T>> chronological_split(std::span<const T> items, double fraction) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw DomainError("split fraction must lie in (0, 1)");
    }
    const auto head = static_cast<std::size_t>(fraction * static_cast<double>(items.size()));
    if (head == 0 || head == items.size()) {
        throw SplitError("chronological split of " + std::to_string(items.size()) +
                         " items leaves an empty part");
    }
    return {std::vector<T>(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(head)),
            std::vector<T>(items.begin() + static_cast<std::ptrdiff_t>(head), items.end())};
}

struct Scaler {
    std::array<double, kFeatureCount> mean{};
    std::array<double, kFeatureCount> std{};

    static Scaler identity();
    void transform(Matrix& x) const;
    bool operator==(const Scaler&) const = default;
};

// Population statistics over every input row of every training window.
Scaler fit_scaler(std::span<const WindowSample> train);
std::vector<WindowSample> apply_scaler(const Scaler& scaler, std::span<const WindowSample> windows);

std::vector<CgmRecord> generate_synthetic(std::uint64_t seed, std::size_t days, const Thresholds& t = {});

// Raw (unscaled) windows for each split plus the scaler fitted on the training split.
struct PreparedData {
    std::vector<WindowSample> train;
    std::vector<WindowSample> val;
    std::vector<WindowSample> test;
    Scaler scaler;
};

struct SplitSpec {
    double train_fraction = 0.8;
    WindowSpec window;
};

// With a separate test series: data -> train/val. Without: data -> train/test, train -> train/val.
// Features are computed over each whole series before splitting; windows never cross a split.
PreparedData prepare(std::span<const CgmRecord> data, std::optional<std::span<const CgmRecord>> test_data,
                     const Thresholds& t, const SplitSpec& spec = {});

}  // namespace glimmer::data

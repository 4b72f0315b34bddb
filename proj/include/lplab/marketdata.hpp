// Pool data: hourly candles, swap events, dataset partitions and the
// subgraph client with its local CSV cache.
#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lplab/features.hpp"

namespace lplab::marketdata {

using features::Candle;

inline constexpr std::int64_t kHour = 3600;

// Half-open [begin, end) in UTC epoch seconds.
struct TimeRange {
    std::int64_t begin = 0;
    std::int64_t end = 0;

    std::int64_t hours() const { return (end - begin) / kHour; }
    bool empty() const { return end <= begin; }
    bool contains(std::int64_t ts) const { return ts >= begin && ts < end; }
};

struct DatasetPartition {
    TimeRange train;
    TimeRange validation;
    TimeRange test;

    // Non-empty, disjoint and ordered train < validation < test.
    void validate() const;
};

struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - begin; }
};

// Midnight UTC of a "YYYY/MM/DD" or "YYYY-MM-DD" date.
std::int64_t parse_utc_date(const std::string& date);
std::string format_utc(std::int64_t epoch_seconds);

// Table-3 style partitions, periods 1..4.
DatasetPartition period_partition(int period);

// Consecutive train/validation/test windows starting at `start`.
DatasetPartition custom_partition(std::int64_t start, std::int64_t train_hours, std::int64_t validation_hours,
                                  std::int64_t test_hours);

// Checks that the candles cover the whole partition and returns it.
DatasetPartition partition(std::span<const Candle> candles, const DatasetPartition& scheme);

// Candle indices whose timestamps fall in `range`. Candles must be sorted.
IndexRange index_range(std::span<const Candle> candles, const TimeRange& range);

// OHLC ordering, non-negative volume, hour alignment and strictly +1h steps.
// Errors name the 1-based data row.
void validate_candles(std::span<const Candle> candles);

// Forward-fills runs of up to max_fill missing hours with flat zero-volume
// candles at the previous close. Longer gaps raise ValidationError listing
// the missing hours.
std::vector<Candle> fill_gaps(std::span<const Candle> candles, int max_fill = 3);

// header: timestamp,open,high,low,close,volume_usd
void write_candles_csv(std::ostream& out, std::span<const Candle> candles);
std::vector<Candle> read_candles_csv(std::istream& in);
void save_candles_csv(const std::filesystem::path& path, std::span<const Candle> candles);
std::vector<Candle> load_candles_csv(const std::filesystem::path& path);

struct GbmParams {
    double p0 = 1600.0;
    double drift = 0.0;  // per hour
    double sigma = 0.01;  // per sqrt(hour)
    std::size_t hours = 1000;
    std::uint64_t seed = 0;
    // high = max(open, close)·exp(k·σ·|w|), low likewise downward, w ~ N(0,1).
    double intra_hour_factor = 0.5;
    double base_volume = 1.0e6;
    std::int64_t start = 1627862400;  // 2021-08-02T00:00:00Z
};

// close_t = open_t·exp((μ − σ²/2) + σ z_t), open_t = close_{t-1}.
std::vector<Candle> synth_gbm(const GbmParams& params);

enum class SwapDirection { Up, Down };

struct SwapEvent {
    std::int64_t timestamp = 0;
    double price_after = 0.0;
    SwapDirection direction = SwapDirection::Up;
};

// header: timestamp,price_after,direction (direction is "up" or "down")
std::vector<SwapEvent> load_swaps_csv(const std::filesystem::path& path);
std::vector<SwapEvent> read_swaps_csv(std::istream& in);

// Maps raw subgraph prices to human prices: raw·10^decimal_shift, then the
// reciprocal when invert is set (high and low swap roles).
struct PriceTransform {
    int decimal_shift = 0;
    bool invert = false;

    double apply(double raw) const;
};

struct ClientOptions {
    int page_size = 1000;
    int max_retries = 4;
    std::chrono::milliseconds initial_backoff{250};
    std::chrono::seconds timeout{30};
};

// GraphQL client for pool-hour-data queries against a subgraph endpoint.
class SubgraphClient {
public:
    explicit SubgraphClient(std::string endpoint, ClientOptions options = {});

    // Raw candles (after the price transform) in [range.begin, range.end),
    // paginated by timestamp cursor.
    std::vector<Candle> fetch_pool_hours(const std::string& pool_id, const TimeRange& range,
                                         const PriceTransform& transform = {});

    // HTTP requests issued so far, including retries.
    std::size_t request_count() const { return requests_; }

private:
    std::string post(const std::string& body);

    std::string endpoint_;
    ClientOptions options_;
    std::size_t requests_ = 0;
};

// Cached fetch: serves from <cache_dir>/<pool_id>/<begin>_<end>.csv when a
// cached file covers the range, otherwise fetches, gap-fills, validates and
// writes the cache.
std::vector<Candle> fetch_pool_hours(SubgraphClient& client, const std::filesystem::path& cache_dir,
                                     const std::string& pool_id, const TimeRange& range,
                                     const PriceTransform& transform = {});

}  // namespace lplab::marketdata

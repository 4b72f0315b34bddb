// Market features and agent observations.
#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lplab::features {

struct Candle {
    std::int64_t timestamp = 0;  // UTC epoch seconds, hour aligned
    double open = 0.0;
    double high = 0.0;
    double low = 0.0;
    double close = 0.0;
    double volume_usd = 0.0;

    bool operator==(const Candle&) const = default;
};

inline constexpr std::size_t kFeatureCount = 28;
inline constexpr std::size_t kObservationSize = kFeatureCount + 4;
inline constexpr std::size_t kDefaultWarmup = 200;

using FeatureVector = std::array<double, kFeatureCount>;
using Observation = std::array<double, kObservationSize>;

// Column names, in state order.
const std::array<std::string_view, kFeatureCount>& feature_names();

struct FeatureConfig {
    int dema = 30;
    double sar_acceleration = 0.02;
    double sar_maximum = 0.2;
    int adx = 14;
    int apo_fast = 12;
    int apo_slow = 26;
    int aroon = 14;
    int cci_short = 14;
    int cci_long = 30;
    int cmo = 14;
    int dx = 14;
    int dm = 14;
    int momentum = 10;
    int trix = 30;
    int ult_short = 7;
    int ult_mid = 14;
    int ult_long = 28;
    int stoch_fastk = 5;
    int stoch_slowk = 3;
    int stoch_slowd = 3;
    int stochf_fastk = 5;
    int stochf_fastd = 3;
    int natr = 14;
    std::size_t warmup = kDefaultWarmup;
};

// Feature rows for every index of the series. Rows before the warm-up may
// contain NaN. Row t only depends on candles[0..t].
std::vector<FeatureVector> compute_feature_matrix(std::span<const Candle> candles, const FeatureConfig& config = {});

// Features at index t from history[0..t]; throws WarmupError when t < warmup
// and RangeError when t is past the end.
FeatureVector compute_features(std::span<const Candle> history, std::size_t t, const FeatureConfig& config = {});

enum class NormalizationMode { Raw, Scaled };

NormalizationMode parse_normalization_mode(std::string_view name);
std::string_view to_string(NormalizationMode mode);

// z-score statistics frozen from a training window. Only columns with an
// unbounded scale are transformed.
class FeatureScaler {
public:
    FeatureScaler();

    static FeatureScaler fit(std::span<const FeatureVector> rows);

    FeatureVector apply(const FeatureVector& f) const;

    const FeatureVector& mean() const { return mean_; }
    const FeatureVector& stddev() const { return stddev_; }

    static bool is_unbounded(std::size_t column);

private:
    FeatureVector mean_{};
    FeatureVector stddev_{};
};

struct PositionSnapshot {
    double cash = 0.0;          // c
    double center_tick = 0.0;   // m
    double width = 0.0;         // w, in tick spacings
    double value = 0.0;         // l
};

struct ScalingContext {
    double l0 = 1.0;
    int max_width = 1;          // N_a
    int tick_spacing = 1;
    double current_tick = 0.0;  // price_to_tick(close_t)
    const FeatureScaler* scaler = nullptr;
};

Observation assemble_observation(const FeatureVector& f, const PositionSnapshot& position, NormalizationMode mode,
                                 const ScalingContext& context = {});

// CSV with a timestamp column followed by the 28 feature columns.
void write_feature_csv(std::ostream& out, std::span<const Candle> candles, std::span<const FeatureVector> rows,
                       std::size_t from = 0);

}  // namespace lplab::features

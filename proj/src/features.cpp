#include "lplab/features.hpp"

#include <cmath>
#include <ostream>

#include "lplab/errors.hpp"
#include "lplab/indicators.hpp"

namespace lplab::features {
namespace {

enum Column : std::size_t {
    kOpen,
    kHighOverOpen,
    kLowOverOpen,
    kCloseOverOpen,
    kVolume,
    kDemaOverOpen,
    kSarOverOpen,
    kAdx,
    kApo,
    kAroonOsc,
    kBop,
    kCciShort,
    kCciLong,
    kCmo,
    kDx,
    kMinusDm,
    kMomentum,
    kPlusDm,
    kTrix,
    kUltOsc,
    kStochSlowK,
    kStochSlowD,
    kStochfFastK,
    kStochfFastD,
    kNatr,
    kTrueRange,
    kHtPeriod,
    kHtPhase,
};

}  // namespace

const std::array<std::string_view, kFeatureCount>& feature_names() {
    static const std::array<std::string_view, kFeatureCount> names = {
        "open",        "high_over_open", "low_over_open", "close_over_open", "volume_usd",   "dema_over_open",
        "sar_over_open", "adx",          "apo",           "aroon_osc",       "bop",          "cci_short",
        "cci_long",    "cmo",            "dx",            "minus_dm",        "momentum",     "plus_dm",
        "trix",        "ult_osc",        "stoch_slowk",   "stoch_slowd",     "stochf_fastk", "stochf_fastd",
        "natr",        "true_range",     "ht_dcperiod",   "ht_dcphase",
    };
    return names;
}

std::vector<FeatureVector> compute_feature_matrix(std::span<const Candle> candles, const FeatureConfig& cfg) {
    const std::size_t n = candles.size();
    std::vector<double> open(n), high(n), low(n), close(n);
    for (std::size_t t = 0; t < n; ++t) {
        open[t] = candles[t].open;
        high[t] = candles[t].high;
        low[t] = candles[t].low;
        close[t] = candles[t].close;
    }
    const indicators::Ohlc ohlc{open, high, low, close};

    const auto dema = indicators::dema(close, cfg.dema);
    const auto sar = indicators::parabolic_sar(ohlc, cfg.sar_acceleration, cfg.sar_maximum);
    const auto adx = indicators::adx(ohlc, cfg.adx);
    const auto apo = indicators::apo(close, cfg.apo_fast, cfg.apo_slow);
    const auto aroon = indicators::aroon_osc(ohlc, cfg.aroon);
    const auto bop = indicators::bop(ohlc);
    const auto cci_short = indicators::cci(ohlc, cfg.cci_short);
    const auto cci_long = indicators::cci(ohlc, cfg.cci_long);
    const auto cmo = indicators::cmo(close, cfg.cmo);
    const auto dx = indicators::dx(ohlc, cfg.dx);
    const auto minus_dm = indicators::minus_dm(ohlc, cfg.dm);
    const auto mom = indicators::momentum(close, cfg.momentum);
    const auto plus_dm = indicators::plus_dm(ohlc, cfg.dm);
    const auto trix = indicators::trix(close, cfg.trix);
    const auto ult = indicators::ult_osc(ohlc, cfg.ult_short, cfg.ult_mid, cfg.ult_long);
    const auto stoch = indicators::stoch(ohlc, cfg.stoch_fastk, cfg.stoch_slowk, cfg.stoch_slowd);
    const auto stochf = indicators::stochf(ohlc, cfg.stochf_fastk, cfg.stochf_fastd);
    const auto natr = indicators::natr(ohlc, cfg.natr);
    const auto trange = indicators::true_range(ohlc);
    const auto cycle = indicators::hilbert_dominant_cycle(close);

    std::vector<FeatureVector> rows(n);
    for (std::size_t t = 0; t < n; ++t) {
        const double o = open[t];
        FeatureVector& f = rows[t];
        f[kOpen] = o;
        f[kHighOverOpen] = high[t] / o;
        f[kLowOverOpen] = low[t] / o;
        f[kCloseOverOpen] = close[t] / o;
        f[kVolume] = candles[t].volume_usd;
        f[kDemaOverOpen] = dema[t] / o;
        f[kSarOverOpen] = sar[t] / o;
        f[kAdx] = adx[t];
        f[kApo] = apo[t];
        f[kAroonOsc] = aroon[t];
        f[kBop] = bop[t];
        f[kCciShort] = cci_short[t];
        f[kCciLong] = cci_long[t];
        f[kCmo] = cmo[t];
        f[kDx] = dx[t];
        f[kMinusDm] = minus_dm[t];
        f[kMomentum] = mom[t];
        f[kPlusDm] = plus_dm[t];
        f[kTrix] = trix[t];
        f[kUltOsc] = ult[t];
        f[kStochSlowK] = stoch.first[t];
        f[kStochSlowD] = stoch.second[t];
        f[kStochfFastK] = stochf.first[t];
        f[kStochfFastD] = stochf.second[t];
        f[kNatr] = natr[t];
        f[kTrueRange] = trange[t];
        f[kHtPeriod] = cycle.period[t];
        f[kHtPhase] = cycle.phase[t];
    }
    return rows;
}

FeatureVector compute_features(std::span<const Candle> history, std::size_t t, const FeatureConfig& config) {
    if (t >= history.size()) {
        throw RangeError("compute_features: index " + std::to_string(t) + " beyond history of " +
                         std::to_string(history.size()));
    }
    if (t < config.warmup) {
        throw WarmupError("compute_features: index " + std::to_string(t) + " needs " +
                          std::to_string(config.warmup - t) + " more candles of warm-up history");
    }
    const auto rows = compute_feature_matrix(history.first(t + 1), config);
    const FeatureVector& f = rows.back();
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        if (!std::isfinite(f[i])) {
            throw ValidationError("compute_features: non-finite " + std::string(feature_names()[i]) + " at index " +
                                  std::to_string(t));
        }
    }
    return f;
}

NormalizationMode parse_normalization_mode(std::string_view name) {
    if (name == "raw") return NormalizationMode::Raw;
    if (name == "scaled") return NormalizationMode::Scaled;
    throw ConfigError("unknown normalization mode '" + std::string(name) + "'");
}

std::string_view to_string(NormalizationMode mode) {
    return mode == NormalizationMode::Raw ? "raw" : "scaled";
}

FeatureScaler::FeatureScaler() { stddev_.fill(1.0); }

bool FeatureScaler::is_unbounded(std::size_t column) {
    switch (column) {
        case kOpen:
        case kVolume:
        case kApo:
        case kCciShort:
        case kCciLong:
        case kMinusDm:
        case kMomentum:
        case kPlusDm:
        case kTrix:
        case kTrueRange:
            return true;
        default:
            return false;
    }
}

FeatureScaler FeatureScaler::fit(std::span<const FeatureVector> rows) {
    FeatureScaler s;
    if (rows.empty()) return s;
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
        double mean = 0.0;
        for (const auto& r : rows) mean += r[c];
        mean /= static_cast<double>(rows.size());
        double var = 0.0;
        for (const auto& r : rows) var += (r[c] - mean) * (r[c] - mean);
        var /= static_cast<double>(rows.size());
        s.mean_[c] = mean;
        s.stddev_[c] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    return s;
}

FeatureVector FeatureScaler::apply(const FeatureVector& f) const {
    FeatureVector out = f;
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
        if (is_unbounded(c)) out[c] = (f[c] - mean_[c]) / stddev_[c];
    }
    return out;
}

Observation assemble_observation(const FeatureVector& f, const PositionSnapshot& p, NormalizationMode mode,
                                 const ScalingContext& ctx) {
    Observation s{};
    if (mode == NormalizationMode::Raw) {
        std::copy(f.begin(), f.end(), s.begin());
        s[kFeatureCount] = p.cash;
        s[kFeatureCount + 1] = p.center_tick;
        s[kFeatureCount + 2] = p.width;
        s[kFeatureCount + 3] = p.value;
        return s;
    }
    if (!(ctx.l0 > 0.0) || ctx.max_width < 1 || ctx.tick_spacing < 1) {
        throw ConfigError("scaled observation requires l0 > 0, max_width >= 1 and tick_spacing >= 1");
    }
    const FeatureVector scaled = ctx.scaler ? ctx.scaler->apply(f) : f;
    std::copy(scaled.begin(), scaled.end(), s.begin());
    s[kFeatureCount] = p.cash / ctx.l0;
    s[kFeatureCount + 1] =
        p.width > 0.0 ? (ctx.current_tick - p.center_tick) / (ctx.tick_spacing * p.width) : 0.0;
    s[kFeatureCount + 2] = p.width / ctx.max_width;
    s[kFeatureCount + 3] = p.value / ctx.l0;
    return s;
}

void write_feature_csv(std::ostream& out, std::span<const Candle> candles, std::span<const FeatureVector> rows,
                       std::size_t from) {
    out << "timestamp";
    for (auto name : feature_names()) out << ',' << name;
    out << '\n';
    out.precision(17);
    for (std::size_t t = from; t < rows.size() && t < candles.size(); ++t) {
        out << candles[t].timestamp;
        for (double v : rows[t]) out << ',' << v;
        out << '\n';
    }
}

}  // namespace lplab::features

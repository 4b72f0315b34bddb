#include <gtest/gtest.h>

#include <cmath>

#include "lplab/errors.hpp"
#include "lplab/features.hpp"
#include "lplab/indicators.hpp"
#include "lplab/marketdata.hpp"

using namespace lplab;
using namespace lplab::features;

namespace {

std::vector<Candle> flat_series(std::size_t n, double price) {
    std::vector<Candle> c(n);
    for (std::size_t i = 0; i < n; ++i) {
        c[i] = {1627862400 + static_cast<std::int64_t>(i) * 3600, price, price, price, price, 1000.0};
    }
    return c;
}

std::vector<Candle> ramp_series(std::size_t n) {
    std::vector<Candle> c(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double close = static_cast<double>(i) + 1.0;
        const double open = i == 0 ? close : close - 1.0;
        c[i] = {1627862400 + static_cast<std::int64_t>(i) * 3600, open, close + 0.25, open - 0.25, close, 500.0};
    }
    return c;
}

std::vector<Candle> gbm(std::size_t n, std::uint64_t seed) {
    marketdata::GbmParams g;
    g.hours = n;
    g.seed = seed;
    return marketdata::synth_gbm(g);
}

bool same(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

}  // namespace

TEST(Indicators, SmaEma) {
    const std::vector<double> x{1, 2, 3, 4, 5};
    const auto s = indicators::sma(x, 3);
    EXPECT_TRUE(std::isnan(s[1]));
    EXPECT_DOUBLE_EQ(s[2], 2.0);
    EXPECT_DOUBLE_EQ(s[4], 4.0);
    const auto e = indicators::ema(x, 3);
    EXPECT_TRUE(std::isnan(e[1]));
    EXPECT_DOUBLE_EQ(e[2], 2.0);           // seed: simple average
    EXPECT_DOUBLE_EQ(e[3], 2.0 + 0.5 * 2); // k = 2/(3+1)
    EXPECT_DOUBLE_EQ(e[4], 3.0 + 0.5 * 2);
}

TEST(Indicators, MomentumAndCmoOnRamp) {
    std::vector<double> x(60);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
    EXPECT_DOUBLE_EQ(indicators::momentum(x, 10)[50], 10.0);
    EXPECT_DOUBLE_EQ(indicators::cmo(x, 14)[50], 100.0);
    std::vector<double> down(x.rbegin(), x.rend());
    EXPECT_DOUBLE_EQ(indicators::cmo(down, 14)[50], -100.0);
}

TEST(Indicators, TrueRangeAndBop) {
    const std::vector<double> o{10, 11}, h{12, 11}, l{9, 11}, c{11, 11};
    const indicators::Ohlc ohlc{o, h, l, c};
    const auto tr = indicators::true_range(ohlc);
    EXPECT_DOUBLE_EQ(tr[1], 0.0);
    const auto bop = indicators::bop(ohlc);
    EXPECT_DOUBLE_EQ(bop[0], 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(bop[1], 0.0);  // high == low
}

TEST(Indicators, AroonOnRamp) {
    const auto c = ramp_series(60);
    std::vector<double> o, h, l, cl;
    for (const auto& k : c) {
        o.push_back(k.open);
        h.push_back(k.high);
        l.push_back(k.low);
        cl.push_back(k.close);
    }
    const auto a = indicators::aroon_osc({o, h, l, cl}, 14);
    EXPECT_DOUBLE_EQ(a[40], 100.0);
}

TEST(Indicators, CausalPrefix) {
    const auto c = gbm(400, 3);
    std::vector<double> close;
    for (const auto& k : c) close.push_back(k.close);
    const auto full = indicators::trix(close, 30);
    const std::vector<double> prefix(close.begin(), close.begin() + 250);
    const auto part = indicators::trix(prefix, 30);
    for (std::size_t i = 0; i < part.size(); ++i) EXPECT_TRUE(same(part[i], full[i])) << i;
}

TEST(Features, NamesAndCount) {
    EXPECT_EQ(feature_names().size(), 28u);
    EXPECT_EQ(kObservationSize, 32u);
    EXPECT_EQ(feature_names()[0], "open");
    EXPECT_EQ(feature_names()[27], "ht_dcphase");
}

TEST(Features, ConstantSeries) {
    const auto c = flat_series(300, 100.0);
    const auto f = compute_features(c, 250);
    EXPECT_EQ(f[0], 100.0);
    EXPECT_EQ(f[1], 1.0);
    EXPECT_EQ(f[2], 1.0);
    EXPECT_EQ(f[3], 1.0);
    EXPECT_EQ(f[10], 0.0);  // bop
    EXPECT_EQ(f[16], 0.0);  // momentum
    EXPECT_EQ(f[25], 0.0);  // true range
    for (double v : f) EXPECT_TRUE(std::isfinite(v));
}

TEST(Features, RampMomentum) {
    const auto c = ramp_series(300);
    EXPECT_DOUBLE_EQ(compute_features(c, 250)[16], 10.0);
    EXPECT_DOUBLE_EQ(compute_features(c, 250)[13], 100.0);  // cmo
}

TEST(Features, WarmupAndRangeErrors) {
    const auto c = gbm(300, 1);
    EXPECT_THROW(compute_features(c, 199), WarmupError);
    EXPECT_NO_THROW(compute_features(c, 200));
    EXPECT_THROW(compute_features(c, 300), RangeError);
    try {
        compute_features(c, 150);
        FAIL();
    } catch (const WarmupError& e) {
        EXPECT_NE(std::string(e.what()).find("50"), std::string::npos);
    }
}

TEST(Features, CausalityUnderFutureMutation) {
    auto c = gbm(500, 2);
    const auto before = compute_features(c, 300);
    for (std::size_t i = 301; i < c.size(); ++i) {
        c[i].close *= 1.5;
        c[i].high *= 1.6;
        c[i].volume_usd = 7.0;
    }
    const auto after = compute_features(c, 300);
    for (std::size_t k = 0; k < kFeatureCount; ++k) EXPECT_EQ(before[k], after[k]) << feature_names()[k];

    const auto m1 = compute_feature_matrix(gbm(500, 2));
    const auto m2 = compute_feature_matrix(c);
    for (std::size_t t = 0; t <= 300; ++t) {
        for (std::size_t k = 0; k < kFeatureCount; ++k) EXPECT_TRUE(same(m1[t][k], m2[t][k]));
    }
}

TEST(Features, NoNonFiniteAfterWarmup) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto g = marketdata::GbmParams{};
        g.hours = 1500;
        g.seed = seed;
        g.sigma = 0.002 * static_cast<double>(seed * seed);
        const auto m = compute_feature_matrix(marketdata::synth_gbm(g));
        for (std::size_t t = kDefaultWarmup; t < m.size(); ++t) {
            for (std::size_t k = 0; k < kFeatureCount; ++k) {
                ASSERT_TRUE(std::isfinite(m[t][k])) << "seed " << seed << " t " << t << " " << feature_names()[k];
            }
        }
    }
}

TEST(Features, DeterministicMatrix) {
    const auto c = gbm(600, 9);
    const auto a = compute_feature_matrix(c), b = compute_feature_matrix(c);
    for (std::size_t t = 0; t < a.size(); ++t) {
        for (std::size_t k = 0; k < kFeatureCount; ++k) EXPECT_TRUE(same(a[t][k], b[t][k]));
    }
}

TEST(Observation, RawIsIdentity) {
    FeatureVector f;
    for (std::size_t i = 0; i < kFeatureCount; ++i) f[i] = static_cast<double>(i) * 1.5 - 3.0;
    const auto s = assemble_observation(f, {12.0, 74100.0, 3.0, 987.0}, NormalizationMode::Raw);
    for (std::size_t i = 0; i < kFeatureCount; ++i) EXPECT_EQ(s[i], f[i]);
    EXPECT_EQ(s[28], 12.0);
    EXPECT_EQ(s[29], 74100.0);
    EXPECT_EQ(s[30], 3.0);
    EXPECT_EQ(s[31], 987.0);
}

TEST(Observation, ScaledSlots) {
    FeatureVector f{};
    ScalingContext ctx{1000.0, 10, 60, 74100.0, nullptr};
    auto s = assemble_observation(f, {1000.0, 74100.0, 2.0, 0.0}, NormalizationMode::Scaled, ctx);
    EXPECT_EQ(s[28], 1.0);
    EXPECT_EQ(s[29], 0.0);
    EXPECT_EQ(s[30], 0.2);
    EXPECT_EQ(s[31], 0.0);
    ctx.current_tick = 74160.0;
    s = assemble_observation(f, {0.0, 74100.0, 2.0, 500.0}, NormalizationMode::Scaled, ctx);
    EXPECT_DOUBLE_EQ(s[29], 0.5);
    EXPECT_EQ(s[31], 0.5);
    EXPECT_THROW(parse_normalization_mode("zscore"), ConfigError);
}

TEST(Scaler, FrozenStatistics) {
    const auto c = gbm(800, 4);
    const auto m = compute_feature_matrix(c);
    const std::vector<FeatureVector> train(m.begin() + 200, m.begin() + 600);
    const auto sc = FeatureScaler::fit(train);
    // Training rows are centred for the unbounded columns; bounded ones pass through.
    std::array<double, kFeatureCount> mean{};
    for (const auto& r : train) {
        const auto z = sc.apply(r);
        for (std::size_t k = 0; k < kFeatureCount; ++k) mean[k] += z[k] / static_cast<double>(train.size());
    }
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
        if (FeatureScaler::is_unbounded(k)) {
            EXPECT_NEAR(mean[k], 0.0, 1e-9) << feature_names()[k];
        } else {
            EXPECT_EQ(sc.apply(train[0])[k], train[0][k]);
        }
    }
    EXPECT_TRUE(FeatureScaler::is_unbounded(0));
}

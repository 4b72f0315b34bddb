#include "lplab/indicators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "lplab/errors.hpp"

namespace lplab::indicators {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_period(int period, const char* name) {
    if (period < 1) throw ConfigError(std::string(name) + ": period must be >= 1");
}

std::size_t first_finite(std::span<const double> x) {
    std::size_t i = 0;
    while (i < x.size() && std::isnan(x[i])) ++i;
    return i;
}

// TA-Lib DM-style smoothing: the first output (index first + n - 2) is the
// plain sum of n - 1 values, then s <- s - s/n + v.
std::vector<double> wilder_sum(std::span<const double> v, int n, std::size_t first) {
    std::vector<double> out(v.size(), kNaN);
    if (n == 1) {
        for (std::size_t t = first; t < v.size(); ++t) out[t] = v[t];
        return out;
    }
    const std::size_t start = first + n - 2;
    if (start >= v.size()) return out;
    double s = 0.0;
    for (std::size_t i = first; i <= start; ++i) s += v[i];
    out[start] = s;
    for (std::size_t t = start + 1; t < v.size(); ++t) {
        s = s - s / n + v[t];
        out[t] = s;
    }
    return out;
}

double safe_ratio(double num, double den) { return den != 0.0 ? num / den : 0.0; }

std::vector<double> directional(const Ohlc& c, bool plus) {
    std::vector<double> dm(c.high.size(), 0.0);
    for (std::size_t t = 1; t < dm.size(); ++t) {
        const double up = c.high[t] - c.high[t - 1];
        const double down = c.low[t - 1] - c.low[t];
        if (plus) {
            dm[t] = (up > down && up > 0.0) ? up : 0.0;
        } else {
            dm[t] = (down > up && down > 0.0) ? down : 0.0;
        }
    }
    return dm;
}

std::vector<double> raw_true_range(const Ohlc& c) {
    std::vector<double> tr(c.high.size(), kNaN);
    for (std::size_t t = 1; t < tr.size(); ++t) {
        const double prev = c.close[t - 1];
        tr[t] = std::max({c.high[t] - c.low[t], std::abs(c.high[t] - prev), std::abs(c.low[t] - prev)});
    }
    return tr;
}

// Windowed extreme; ties resolve to the most recent index.
std::size_t arg_extreme(std::span<const double> x, std::size_t from, std::size_t to, bool highest) {
    std::size_t best = from;
    for (std::size_t i = from; i <= to; ++i) {
        if (highest ? x[i] >= x[best] : x[i] <= x[best]) best = i;
    }
    return best;
}

}  // namespace

std::vector<double> sma(std::span<const double> x, int period) {
    require_period(period, "sma");
    std::vector<double> out(x.size(), kNaN);
    const std::size_t f = first_finite(x);
    double sum = 0.0;
    for (std::size_t t = f; t < x.size(); ++t) {
        sum += x[t];
        if (t >= f + period) sum -= x[t - period];
        if (t + 1 >= f + period) out[t] = sum / period;
    }
    return out;
}

std::vector<double> ema(std::span<const double> x, int period) {
    require_period(period, "ema");
    std::vector<double> out(x.size(), kNaN);
    const std::size_t f = first_finite(x);
    if (f + period > x.size()) return out;
    const double k = 2.0 / (period + 1.0);
    double value = 0.0;
    for (std::size_t i = f; i < f + period; ++i) value += x[i];
    value /= period;
    out[f + period - 1] = value;
    for (std::size_t t = f + period; t < x.size(); ++t) {
        value = (x[t] - value) * k + value;
        out[t] = value;
    }
    return out;
}

std::vector<double> dema(std::span<const double> x, int period) {
    const auto e1 = ema(x, period);
    const auto e2 = ema(e1, period);
    std::vector<double> out(x.size(), kNaN);
    for (std::size_t t = 0; t < x.size(); ++t) {
        if (!std::isnan(e2[t])) out[t] = 2.0 * e1[t] - e2[t];
    }
    return out;
}

std::vector<double> trix(std::span<const double> x, int period) {
    const auto e3 = ema(ema(ema(x, period), period), period);
    std::vector<double> out(x.size(), kNaN);
    for (std::size_t t = 1; t < x.size(); ++t) {
        if (!std::isnan(e3[t]) && !std::isnan(e3[t - 1])) out[t] = 100.0 * safe_ratio(e3[t] - e3[t - 1], e3[t - 1]);
    }
    return out;
}

std::vector<double> momentum(std::span<const double> x, int period) {
    require_period(period, "momentum");
    std::vector<double> out(x.size(), kNaN);
    for (std::size_t t = period; t < x.size(); ++t) out[t] = x[t] - x[t - period];
    return out;
}

std::vector<double> cmo(std::span<const double> x, int period) {
    require_period(period, "cmo");
    std::vector<double> out(x.size(), kNaN);
    if (x.size() <= static_cast<std::size_t>(period)) return out;
    double gain = 0.0;
    double loss = 0.0;
    for (int i = 1; i <= period; ++i) {
        const double d = x[i] - x[i - 1];
        (d > 0 ? gain : loss) += std::abs(d);
    }
    gain /= period;
    loss /= period;
    out[period] = 100.0 * safe_ratio(gain - loss, gain + loss);
    for (std::size_t t = period + 1; t < x.size(); ++t) {
        const double d = x[t] - x[t - 1];
        gain = (gain * (period - 1) + (d > 0 ? d : 0.0)) / period;
        loss = (loss * (period - 1) + (d < 0 ? -d : 0.0)) / period;
        out[t] = 100.0 * safe_ratio(gain - loss, gain + loss);
    }
    return out;
}

std::vector<double> apo(std::span<const double> x, int fast, int slow) {
    const auto a = sma(x, fast);
    const auto b = sma(x, slow);
    std::vector<double> out(x.size(), kNaN);
    for (std::size_t t = 0; t < x.size(); ++t) {
        if (!std::isnan(a[t]) && !std::isnan(b[t])) out[t] = a[t] - b[t];
    }
    return out;
}

std::vector<double> true_range(const Ohlc& c) { return raw_true_range(c); }

std::vector<double> natr(const Ohlc& c, int period) {
    require_period(period, "natr");
    const auto tr = raw_true_range(c);
    std::vector<double> out(tr.size(), kNaN);
    if (tr.size() <= static_cast<std::size_t>(period)) return out;
    double atr = 0.0;
    for (int i = 1; i <= period; ++i) atr += tr[i];
    atr /= period;
    out[period] = 100.0 * safe_ratio(atr, c.close[period]);
    for (std::size_t t = period + 1; t < tr.size(); ++t) {
        atr = (atr * (period - 1) + tr[t]) / period;
        out[t] = 100.0 * safe_ratio(atr, c.close[t]);
    }
    return out;
}

std::vector<double> plus_dm(const Ohlc& c, int period) {
    require_period(period, "plus_dm");
    if (c.high.size() < static_cast<std::size_t>(period)) return std::vector<double>(c.high.size(), kNaN);
    return wilder_sum(directional(c, true), period, 1);
}

std::vector<double> minus_dm(const Ohlc& c, int period) {
    require_period(period, "minus_dm");
    if (c.high.size() < static_cast<std::size_t>(period)) return std::vector<double>(c.high.size(), kNaN);
    return wilder_sum(directional(c, false), period, 1);
}

std::vector<double> dx(const Ohlc& c, int period) {
    require_period(period, "dx");
    const std::size_t n = c.high.size();
    std::vector<double> out(n, kNaN);
    if (n <= static_cast<std::size_t>(period)) return out;
    const auto pdm = directional(c, true);
    const auto mdm = directional(c, false);
    const auto tr = raw_true_range(c);
    double sp = 0.0, sm = 0.0, st = 0.0;
    for (int i = 1; i < period; ++i) {
        sp += pdm[i];
        sm += mdm[i];
        st += tr[i];
    }
    for (std::size_t t = period; t < n; ++t) {
        sp = sp - sp / period + pdm[t];
        sm = sm - sm / period + mdm[t];
        st = st - st / period + tr[t];
        const double pdi = 100.0 * safe_ratio(sp, st);
        const double mdi = 100.0 * safe_ratio(sm, st);
        out[t] = 100.0 * safe_ratio(std::abs(pdi - mdi), pdi + mdi);
    }
    return out;
}

std::vector<double> adx(const Ohlc& c, int period) {
    const auto d = dx(c, period);
    std::vector<double> out(d.size(), kNaN);
    const std::size_t first = 2 * static_cast<std::size_t>(period) - 1;
    if (d.size() <= first) return out;
    double value = 0.0;
    for (std::size_t i = period; i <= first; ++i) value += d[i];
    value /= period;
    out[first] = value;
    for (std::size_t t = first + 1; t < d.size(); ++t) {
        value = (value * (period - 1) + d[t]) / period;
        out[t] = value;
    }
    return out;
}

std::vector<double> aroon_osc(const Ohlc& c, int period) {
    require_period(period, "aroon_osc");
    std::vector<double> out(c.high.size(), kNaN);
    for (std::size_t t = period; t < c.high.size(); ++t) {
        const auto hi = arg_extreme(c.high, t - period, t, true);
        const auto lo = arg_extreme(c.low, t - period, t, false);
        out[t] = 100.0 * (static_cast<double>(hi) - static_cast<double>(lo)) / period;
    }
    return out;
}

std::vector<double> bop(const Ohlc& c) {
    std::vector<double> out(c.high.size());
    for (std::size_t t = 0; t < out.size(); ++t) {
        out[t] = safe_ratio(c.close[t] - c.open[t], c.high[t] - c.low[t]);
    }
    return out;
}

std::vector<double> cci(const Ohlc& c, int period) {
    require_period(period, "cci");
    const std::size_t n = c.high.size();
    std::vector<double> tp(n);
    for (std::size_t t = 0; t < n; ++t) tp[t] = (c.high[t] + c.low[t] + c.close[t]) / 3.0;
    std::vector<double> out(n, kNaN);
    for (std::size_t t = period - 1; t < n; ++t) {
        double mean = 0.0;
        for (std::size_t i = t + 1 - period; i <= t; ++i) mean += tp[i];
        mean /= period;
        double dev = 0.0;
        for (std::size_t i = t + 1 - period; i <= t; ++i) dev += std::abs(tp[i] - mean);
        dev /= period;
        out[t] = safe_ratio(tp[t] - mean, 0.015 * dev);
    }
    return out;
}

std::vector<double> ult_osc(const Ohlc& c, int p1, int p2, int p3) {
    require_period(p1, "ult_osc");
    require_period(p2, "ult_osc");
    require_period(p3, "ult_osc");
    const std::size_t n = c.high.size();
    std::vector<double> bp(n, 0.0), tr(n, 0.0);
    for (std::size_t t = 1; t < n; ++t) {
        const double true_low = std::min(c.low[t], c.close[t - 1]);
        const double true_high = std::max(c.high[t], c.close[t - 1]);
        bp[t] = c.close[t] - true_low;
        tr[t] = true_high - true_low;
    }
    const int longest = std::max({p1, p2, p3});
    auto average = [&](std::size_t t, int p) {
        double b = 0.0, r = 0.0;
        for (std::size_t i = t + 1 - p; i <= t; ++i) {
            b += bp[i];
            r += tr[i];
        }
        return safe_ratio(b, r);
    };
    std::vector<double> out(n, kNaN);
    for (std::size_t t = longest; t < n; ++t) {
        out[t] = 100.0 * (4.0 * average(t, p1) + 2.0 * average(t, p2) + average(t, p3)) / 7.0;
    }
    return out;
}

std::vector<double> parabolic_sar(const Ohlc& c, double acceleration, double maximum) {
    const std::size_t n = c.high.size();
    std::vector<double> out(n, kNaN);
    if (n < 2) return out;

    // Initial direction from the first bar pair's directional movement.
    const double up = c.high[1] - c.high[0];
    const double down = c.low[0] - c.low[1];
    bool is_long = !(down > 0.0 && down > up);

    double af = acceleration;
    double ep = is_long ? c.high[1] : c.low[1];
    double sar = is_long ? c.low[0] : c.high[0];
    double new_high = c.high[0];
    double new_low = c.low[0];

    for (std::size_t t = 1; t < n; ++t) {
        const double prev_high = new_high;
        const double prev_low = new_low;
        new_high = c.high[t];
        new_low = c.low[t];
        if (is_long) {
            if (new_low <= sar) {
                is_long = false;
                sar = std::max({ep, prev_high, new_high});
                out[t] = sar;
                af = acceleration;
                ep = new_low;
                sar = std::max({sar + af * (ep - sar), prev_high, new_high});
            } else {
                out[t] = sar;
                if (new_high > ep) {
                    ep = new_high;
                    af = std::min(af + acceleration, maximum);
                }
                sar = std::min({sar + af * (ep - sar), prev_low, new_low});
            }
        } else {
            if (new_high >= sar) {
                is_long = true;
                sar = std::min({ep, prev_low, new_low});
                out[t] = sar;
                af = acceleration;
                ep = new_high;
                sar = std::min({sar + af * (ep - sar), prev_low, new_low});
            } else {
                out[t] = sar;
                if (new_low < ep) {
                    ep = new_low;
                    af = std::min(af + acceleration, maximum);
                }
                sar = std::max({sar + af * (ep - sar), prev_high, new_high});
            }
        }
    }
    return out;
}

namespace {

std::vector<double> raw_fast_k(const Ohlc& c, int period) {
    const std::size_t n = c.high.size();
    std::vector<double> out(n, kNaN);
    for (std::size_t t = period - 1; t < n; ++t) {
        const std::size_t from = t + 1 - period;
        const double hh = c.high[arg_extreme(c.high, from, t, true)];
        const double ll = c.low[arg_extreme(c.low, from, t, false)];
        out[t] = 100.0 * safe_ratio(c.close[t] - ll, hh - ll);
    }
    return out;
}

}  // namespace

StochOutput stoch(const Ohlc& c, int fastk_period, int slowk_period, int slowd_period) {
    require_period(fastk_period, "stoch");
    const auto fast_k = raw_fast_k(c, fastk_period);
    auto slow_k = sma(fast_k, slowk_period);
    auto slow_d = sma(slow_k, slowd_period);
    return {std::move(slow_k), std::move(slow_d)};
}

StochOutput stochf(const Ohlc& c, int fastk_period, int fastd_period) {
    require_period(fastk_period, "stochf");
    auto fast_k = raw_fast_k(c, fastk_period);
    auto fast_d = sma(fast_k, fastd_period);
    for (std::size_t t = 0; t < fast_k.size(); ++t) {
        if (std::isnan(fast_d[t])) fast_k[t] = kNaN;
    }
    return {std::move(fast_k), std::move(fast_d)};
}

HilbertCycle hilbert_dominant_cycle(std::span<const double> x) {
    constexpr double a = 0.0962;
    constexpr double b = 0.5769;
    constexpr double rad2deg = 180.0 / std::numbers::pi;
    const std::size_t n = x.size();

    HilbertCycle out{std::vector<double>(n, kNaN), std::vector<double>(n, kNaN)};
    std::vector<double> smooth(n, 0.0), detrender(n, 0.0), q1(n, 0.0), i1(n, 0.0);

    auto lag = [](const std::vector<double>& v, std::size_t t, std::size_t k) { return t >= k ? v[t - k] : 0.0; };
    auto transform = [&](const std::vector<double>& v, std::size_t t) {
        return a * v[t] + b * lag(v, t, 2) - b * lag(v, t, 4) - a * lag(v, t, 6);
    };

    double period = 0.0, smooth_period = 0.0;
    double prev_i2 = 0.0, prev_q2 = 0.0, re = 0.0, im = 0.0;
    double phase = 0.0;

    for (std::size_t t = 3; t < n; ++t) {
        smooth[t] = (4.0 * x[t] + 3.0 * x[t - 1] + 2.0 * x[t - 2] + x[t - 3]) / 10.0;
        const double adjusted = 0.075 * period + 0.54;

        detrender[t] = transform(smooth, t) * adjusted;
        q1[t] = transform(detrender, t) * adjusted;
        i1[t] = lag(detrender, t, 3);
        const double ji = transform(i1, t) * adjusted;
        const double jq = transform(q1, t) * adjusted;

        const double i2 = 0.2 * (i1[t] - jq) + 0.8 * prev_i2;
        const double q2 = 0.2 * (q1[t] + ji) + 0.8 * prev_q2;
        re = 0.2 * (i2 * prev_i2 + q2 * prev_q2) + 0.8 * re;
        im = 0.2 * (i2 * prev_q2 - q2 * prev_i2) + 0.8 * im;
        prev_i2 = i2;
        prev_q2 = q2;

        const double prev_period = period;
        if (im != 0.0 && re != 0.0) period = 360.0 / (std::atan(im / re) * rad2deg);
        period = std::min(period, 1.5 * prev_period);
        period = std::max(period, 0.67 * prev_period);
        period = std::clamp(period, 6.0, 50.0);
        period = 0.2 * period + 0.8 * prev_period;
        smooth_period = 0.33 * period + 0.67 * smooth_period;

        // Phase from a one-cycle DFT of the smoothed price.
        const int cycle = static_cast<int>(smooth_period + 0.5);
        double real_part = 0.0, imag_part = 0.0;
        for (int i = 0; i < cycle && static_cast<std::size_t>(i) <= t; ++i) {
            const double angle = 2.0 * std::numbers::pi * i / cycle;
            real_part += std::sin(angle) * smooth[t - i];
            imag_part += std::cos(angle) * smooth[t - i];
        }
        if (std::abs(imag_part) > 0.0) {
            phase = std::atan(real_part / imag_part) * rad2deg;
        } else if (real_part < 0.0) {
            phase -= 90.0;
        } else if (real_part > 0.0) {
            phase += 90.0;
        }
        phase += 90.0;
        if (smooth_period > 0.0) phase += 360.0 / smooth_period;
        if (imag_part < 0.0) phase += 180.0;
        if (phase > 315.0) phase -= 360.0;

        out.period[t] = smooth_period;
        out.phase[t] = phase;
    }
    return out;
}

}  // namespace lplab::indicators

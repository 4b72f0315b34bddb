// Technical indicators over whole series.
//
// Each function returns a vector the length of its input. Entries before the
// indicator's lookback are NaN. Every value at index t depends only on inputs
// at indices <= t. Definitions and defaults follow the usual TA-Lib semantics.
#pragma once

#include <span>
#include <vector>

namespace lplab::indicators {

struct Ohlc {
    std::span<const double> open;
    std::span<const double> high;
    std::span<const double> low;
    std::span<const double> close;
};

std::vector<double> sma(std::span<const double> x, int period);
// Seeded with the simple average of the first `period` values.
std::vector<double> ema(std::span<const double> x, int period);
std::vector<double> dema(std::span<const double> x, int period);
std::vector<double> trix(std::span<const double> x, int period);
std::vector<double> momentum(std::span<const double> x, int period);
std::vector<double> cmo(std::span<const double> x, int period);
std::vector<double> apo(std::span<const double> x, int fast, int slow);

std::vector<double> true_range(const Ohlc& c);
std::vector<double> natr(const Ohlc& c, int period);
std::vector<double> plus_dm(const Ohlc& c, int period);
std::vector<double> minus_dm(const Ohlc& c, int period);
std::vector<double> dx(const Ohlc& c, int period);
std::vector<double> adx(const Ohlc& c, int period);
std::vector<double> aroon_osc(const Ohlc& c, int period);
std::vector<double> bop(const Ohlc& c);
std::vector<double> cci(const Ohlc& c, int period);
std::vector<double> ult_osc(const Ohlc& c, int p1, int p2, int p3);
std::vector<double> parabolic_sar(const Ohlc& c, double acceleration, double maximum);

struct StochOutput {
    std::vector<double> first;
    std::vector<double> second;
};

// Slow stochastic: (slowK, slowD).
StochOutput stoch(const Ohlc& c, int fastk_period, int slowk_period, int slowd_period);
// Fast stochastic: (fastK, fastD).
StochOutput stochf(const Ohlc& c, int fastk_period, int fastd_period);

struct HilbertCycle {
    std::vector<double> period;
    std::vector<double> phase;
};

// Ehlers' homodyne dominant-cycle period and phase.
HilbertCycle hilbert_dominant_cycle(std::span<const double> x);

}  // namespace lplab::indicators

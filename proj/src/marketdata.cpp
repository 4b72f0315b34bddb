#include "lplab/marketdata.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "lplab/csv.hpp"
#include "lplab/errors.hpp"

namespace lplab::marketdata {
namespace {

constexpr std::string_view kCandleHeader = "timestamp,open,high,low,close,volume_usd";
constexpr std::string_view kSwapHeader = "timestamp,price_after,direction";

std::string row_label(std::size_t row) { return "row " + std::to_string(row + 1); }

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint '" + url + "' has no scheme");
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

double json_number(const nlohmann::json& item, const char* key, std::size_t index) {
    const std::string where = "poolHourDatas[" + std::to_string(index) + "]." + key;
    if (!item.contains(key)) throw DecodeError(where + " missing");
    const auto& v = item.at(key);
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        return csv::parse_double(s, where);
    }
    throw DecodeError(where + " has unexpected type");
}

}  // namespace

void DatasetPartition::validate() const {
    const std::array<std::pair<const char*, const TimeRange*>, 3> parts{
        {{"train", &train}, {"validation", &validation}, {"test", &test}}};
    for (const auto& [name, r] : parts) {
        if (r->empty()) throw ValidationError(std::string("partition: ") + name + " range is empty");
    }
    if (train.end > validation.begin || validation.end > test.begin) {
        throw ValidationError("partition: ranges must be disjoint and ordered train < validation < test");
    }
}

std::int64_t parse_utc_date(const std::string& date) {
    int y = 0;
    unsigned m = 0, d = 0;
    char s1 = 0, s2 = 0;
    std::istringstream in(date);
    if (!(in >> y >> s1 >> m >> s2 >> d) || (s1 != '/' && s1 != '-') || s2 != s1) {
        throw ConfigError("cannot parse date '" + date + "'");
    }
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) throw ConfigError("invalid date '" + date + "'");
    return std::chrono::sys_seconds{std::chrono::sys_days{ymd}}.time_since_epoch().count();
}

std::string format_utc(std::int64_t epoch_seconds) {
    const std::chrono::sys_seconds tp{std::chrono::seconds{epoch_seconds}};
    const auto days = std::chrono::floor<std::chrono::days>(tp);
    const std::chrono::year_month_day ymd{days};
    const auto secs = (tp - days).count();
    char buf[48];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long long>(secs / 3600), static_cast<long long>(secs / 60 % 60),
                  static_cast<long long>(secs % 60));
    return buf;
}

DatasetPartition period_partition(int period) {
    struct Row {
        const char* dates[6];
    };
    static constexpr std::array<Row, 4> rows{{
        {{"2021/08/02", "2022/07/01", "2022/07/01", "2022/08/11", "2022/08/12", "2022/09/22"}},
        {{"2021/09/12", "2022/08/11", "2022/08/12", "2022/09/22", "2022/09/22", "2022/11/03"}},
        {{"2021/10/24", "2022/09/22", "2022/09/22", "2022/11/03", "2022/11/03", "2022/12/14"}},
        {{"2021/12/05", "2022/11/03", "2022/11/03", "2022/12/14", "2022/12/15", "2023/01/25"}},
    }};
    if (period < 1 || period > 4) throw ConfigError("period must be in 1..4, got " + std::to_string(period));
    const auto& r = rows[period - 1].dates;
    DatasetPartition p{{parse_utc_date(r[0]), parse_utc_date(r[1])},
                       {parse_utc_date(r[2]), parse_utc_date(r[3])},
                       {parse_utc_date(r[4]), parse_utc_date(r[5])}};
    p.validate();
    return p;
}

DatasetPartition custom_partition(std::int64_t start, std::int64_t train_hours, std::int64_t validation_hours,
                                  std::int64_t test_hours) {
    DatasetPartition p;
    p.train = {start, start + train_hours * kHour};
    p.validation = {p.train.end, p.train.end + validation_hours * kHour};
    p.test = {p.validation.end, p.validation.end + test_hours * kHour};
    p.validate();
    return p;
}

DatasetPartition partition(std::span<const Candle> candles, const DatasetPartition& scheme) {
    scheme.validate();
    if (candles.empty()) throw ValidationError("partition: no candles");
    const auto first = candles.front().timestamp;
    const auto last = candles.back().timestamp;
    if (first > scheme.train.begin || last < scheme.test.end - kHour) {
        throw ValidationError("partition: candles cover " + format_utc(first) + " .. " + format_utc(last) +
                              " but the scheme needs " + format_utc(scheme.train.begin) + " .. " +
                              format_utc(scheme.test.end - kHour));
    }
    return scheme;
}

IndexRange index_range(std::span<const Candle> candles, const TimeRange& range) {
    const auto lo = std::lower_bound(candles.begin(), candles.end(), range.begin,
                                     [](const Candle& c, std::int64_t ts) { return c.timestamp < ts; });
    const auto hi = std::lower_bound(lo, candles.end(), range.end,
                                     [](const Candle& c, std::int64_t ts) { return c.timestamp < ts; });
    return {static_cast<std::size_t>(lo - candles.begin()), static_cast<std::size_t>(hi - candles.begin())};
}

void validate_candles(std::span<const Candle> candles) {
    for (std::size_t i = 0; i < candles.size(); ++i) {
        const Candle& c = candles[i];
        const bool finite = std::isfinite(c.open) && std::isfinite(c.high) && std::isfinite(c.low) &&
                            std::isfinite(c.close) && std::isfinite(c.volume_usd);
        if (!finite || !(c.low > 0.0)) {
            throw ValidationError(row_label(i) + ": prices must be positive and finite");
        }
        if (!(c.low <= std::min(c.open, c.close) && std::max(c.open, c.close) <= c.high)) {
            throw ValidationError(row_label(i) + ": OHLC ordering violated (need low <= open,close <= high)");
        }
        if (c.volume_usd < 0.0) throw ValidationError(row_label(i) + ": negative volume");
        if (c.timestamp % kHour != 0) throw ValidationError(row_label(i) + ": timestamp not hour aligned");
        if (i > 0 && c.timestamp != candles[i - 1].timestamp + kHour) {
            throw ValidationError(row_label(i) + ": timestamp does not follow the previous row by exactly 3600 s");
        }
    }
}

std::vector<Candle> fill_gaps(std::span<const Candle> candles, int max_fill) {
    std::vector<Candle> out;
    out.reserve(candles.size());
    std::vector<std::int64_t> unfillable;
    for (std::size_t i = 0; i < candles.size(); ++i) {
        if (i > 0) {
            const auto prev = candles[i - 1].timestamp;
            const auto cur = candles[i].timestamp;
            if (cur <= prev) throw ValidationError(row_label(i) + ": timestamps not strictly increasing");
            const auto missing = (cur - prev) / kHour - 1;
            if (missing > max_fill) {
                for (auto ts = prev + kHour; ts < cur; ts += kHour) unfillable.push_back(ts);
            } else {
                const double p = candles[i - 1].close;
                for (auto ts = prev + kHour; ts < cur; ts += kHour) out.push_back({ts, p, p, p, p, 0.0});
            }
        }
        out.push_back(candles[i]);
    }
    if (!unfillable.empty()) {
        std::string msg = "gap longer than " + std::to_string(max_fill) + " hours; " +
                          std::to_string(unfillable.size()) + " missing hours:";
        const std::size_t shown = std::min<std::size_t>(unfillable.size(), 24);
        for (std::size_t i = 0; i < shown; ++i) msg += " " + format_utc(unfillable[i]);
        if (shown < unfillable.size()) msg += " ...";
        throw ValidationError(msg);
    }
    return out;
}

void write_candles_csv(std::ostream& out, std::span<const Candle> candles) {
    out << kCandleHeader << '\n';
    for (const auto& c : candles) {
        out << c.timestamp << ',' << csv::format(c.open) << ',' << csv::format(c.high) << ',' << csv::format(c.low)
            << ',' << csv::format(c.close) << ',' << csv::format(c.volume_usd) << '\n';
    }
}

std::vector<Candle> read_candles_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw DecodeError("candle csv: missing header");
    csv::expect_header(line, kCandleHeader, "candle csv");
    std::vector<Candle> out;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto fields = csv::split(line);
        const std::string where = "candle csv " + row_label(row);
        if (fields.size() != 6) throw DecodeError(where + ": expected 6 fields, got " + std::to_string(fields.size()));
        out.push_back({csv::parse_int(fields[0], where), csv::parse_double(fields[1], where),
                       csv::parse_double(fields[2], where), csv::parse_double(fields[3], where),
                       csv::parse_double(fields[4], where), csv::parse_double(fields[5], where)});
        ++row;
    }
    return out;
}

void save_candles_csv(const std::filesystem::path& path, std::span<const Candle> candles) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    // Write-then-rename so readers never observe a partial file.
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw ConfigError("cannot write " + tmp);
        write_candles_csv(out, candles);
    }
    std::filesystem::rename(tmp, path);
}

std::vector<Candle> load_candles_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open candle file " + path.string());
    return read_candles_csv(in);
}

std::vector<Candle> synth_gbm(const GbmParams& p) {
    if (!(p.p0 > 0.0)) throw DomainError("synth_gbm: p0 must be positive");
    if (!(p.sigma >= 0.0)) throw DomainError("synth_gbm: sigma must be non-negative");
    std::mt19937_64 rng(p.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Candle> out;
    out.reserve(p.hours);
    double prev_close = p.p0;
    const double log_drift = p.drift - 0.5 * p.sigma * p.sigma;
    for (std::size_t t = 0; t < p.hours; ++t) {
        const double z = normal(rng);
        const double w_high = std::abs(normal(rng));
        const double w_low = std::abs(normal(rng));
        const double w_vol = normal(rng);
        Candle c;
        c.timestamp = p.start + static_cast<std::int64_t>(t) * kHour;
        c.open = prev_close;
        c.close = prev_close * std::exp(log_drift + p.sigma * z);
        c.high = std::max(c.open, c.close) * std::exp(p.intra_hour_factor * p.sigma * w_high);
        c.low = std::min(c.open, c.close) * std::exp(-p.intra_hour_factor * p.sigma * w_low);
        c.volume_usd = p.base_volume * std::exp(0.5 * w_vol);
        out.push_back(c);
        prev_close = c.close;
    }
    return out;
}

std::vector<SwapEvent> read_swaps_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw DecodeError("swap csv: missing header");
    csv::expect_header(line, kSwapHeader, "swap csv");
    std::vector<SwapEvent> out;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto f = csv::split(line);
        const std::string where = "swap csv " + row_label(row);
        if (f.size() != 3) throw DecodeError(where + ": expected 3 fields");
        SwapEvent e;
        e.timestamp = csv::parse_int(f[0], where);
        e.price_after = csv::parse_double(f[1], where);
        if (f[2] == "up") {
            e.direction = SwapDirection::Up;
        } else if (f[2] == "down") {
            e.direction = SwapDirection::Down;
        } else {
            throw DecodeError(where + ": direction must be 'up' or 'down'");
        }
        if (!(e.price_after > 0.0)) throw ValidationError(where + ": price_after must be positive");
        if (!out.empty() && e.timestamp < out.back().timestamp) {
            throw ValidationError(where + ": timestamps must be non-decreasing");
        }
        out.push_back(e);
        ++row;
    }
    return out;
}

std::vector<SwapEvent> load_swaps_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open swap file " + path.string());
    return read_swaps_csv(in);
}

double PriceTransform::apply(double raw) const {
    const double shifted = raw * std::pow(10.0, decimal_shift);
    return invert ? 1.0 / shifted : shifted;
}

SubgraphClient::SubgraphClient(std::string endpoint, ClientOptions options)
    : endpoint_(std::move(endpoint)), options_(options) {
    split_url(endpoint_);
}

std::string SubgraphClient::post(const std::string& body) {
    const auto url = split_url(endpoint_);
    httplib::Client client(url.origin);
    client.set_connection_timeout(options_.timeout);
    client.set_read_timeout(options_.timeout);
    auto backoff = options_.initial_backoff;
    std::string last_error;
    for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        ++requests_;
        auto res = client.Post(url.path, body, "application/json");
        if (!res) {
            last_error = "request failed: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 200) return res->body;
        last_error = "HTTP " + std::to_string(res->status);
        const bool retryable = res->status == 429 || res->status >= 500;
        if (!retryable) break;
    }
    throw TransportError(endpoint_ + ": " + last_error);
}

std::vector<Candle> SubgraphClient::fetch_pool_hours(const std::string& pool_id, const TimeRange& range,
                                                     const PriceTransform& transform) {
    std::vector<Candle> out;
    if (range.empty()) return out;
    static const std::string query =
        "query($pool: String!, $from: Int!, $to: Int!, $first: Int!) {"
        " poolHourDatas(first: $first, orderBy: periodStartUnix, orderDirection: asc,"
        " where: {pool: $pool, periodStartUnix_gte: $from, periodStartUnix_lt: $to})"
        " { periodStartUnix open high low close volumeUSD } }";
    std::int64_t cursor = range.begin;
    while (cursor < range.end) {
        const nlohmann::json request = {
            {"query", query},
            {"variables", {{"pool", pool_id}, {"from", cursor}, {"to", range.end}, {"first", options_.page_size}}}};
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(post(request.dump()));
        } catch (const nlohmann::json::parse_error& e) {
            throw DecodeError(std::string("subgraph response is not JSON: ") + e.what());
        }
        if (doc.contains("errors")) throw DecodeError("subgraph returned errors: " + doc["errors"].dump());
        if (!doc.contains("data") || !doc["data"].contains("poolHourDatas") ||
            !doc["data"]["poolHourDatas"].is_array()) {
            throw DecodeError("subgraph response lacks data.poolHourDatas");
        }
        const auto& page = doc["data"]["poolHourDatas"];
        for (std::size_t i = 0; i < page.size(); ++i) {
            const auto& item = page[i];
            Candle c;
            c.timestamp = static_cast<std::int64_t>(json_number(item, "periodStartUnix", i));
            const double o = transform.apply(json_number(item, "open", i));
            const double h = transform.apply(json_number(item, "high", i));
            const double l = transform.apply(json_number(item, "low", i));
            c.open = o;
            c.close = transform.apply(json_number(item, "close", i));
            c.high = transform.invert ? l : h;
            c.low = transform.invert ? h : l;
            c.volume_usd = json_number(item, "volumeUSD", i);
            if (!out.empty() && c.timestamp <= out.back().timestamp) {
                throw DecodeError("subgraph returned non-increasing timestamps");
            }
            out.push_back(c);
        }
        if (page.size() < static_cast<std::size_t>(options_.page_size)) break;
        cursor = out.back().timestamp + 1;
    }
    return out;
}

std::vector<Candle> fetch_pool_hours(SubgraphClient& client, const std::filesystem::path& cache_dir,
                                     const std::string& pool_id, const TimeRange& range,
                                     const PriceTransform& transform) {
    if (range.empty()) return {};
    const auto pool_dir = cache_dir / pool_id;
    std::error_code ec;
    if (std::filesystem::is_directory(pool_dir, ec)) {
        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::directory_iterator(pool_dir)) {
            if (entry.path().extension() == ".csv") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& file : files) {
            const auto stem = file.stem().string();
            const auto sep = stem.find('_');
            if (sep == std::string::npos) continue;
            std::int64_t begin = 0, end = 0;
            try {
                begin = csv::parse_int(std::string_view(stem).substr(0, sep), file.string());
                end = csv::parse_int(std::string_view(stem).substr(sep + 1), file.string());
            } catch (const DecodeError&) {
                continue;
            }
            if (begin <= range.begin && end >= range.end) {
                const auto cached = load_candles_csv(file);
                const auto idx = index_range(cached, range);
                return {cached.begin() + static_cast<std::ptrdiff_t>(idx.begin),
                        cached.begin() + static_cast<std::ptrdiff_t>(idx.end)};
            }
        }
    }
    auto candles = fill_gaps(client.fetch_pool_hours(pool_id, range, transform));
    validate_candles(candles);
    save_candles_csv(pool_dir / (std::to_string(range.begin) + "_" + std::to_string(range.end) + ".csv"), candles);
    return candles;
}

}  // namespace lplab::marketdata

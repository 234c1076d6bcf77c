#ifndef GSMDG_INGEST_HPP
#define GSMDG_INGEST_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "csv.hpp"

namespace gsmdg {

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class TimestampKind { date, tick };

/// An ordered event-count series. Timestamps are kept as day numbers (dates)
/// or raw integer ticks, so gaps are simply missing integers.
struct TimeSeries {
    TimestampKind kind = TimestampKind::tick;
    std::vector<std::int64_t> timestamps;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
};

namespace detail {

inline std::optional<std::int64_t> parse_iso_date(std::string_view s) {
    s = csv::trim(s);
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    auto y = csv::parse_int(s.substr(0, 4));
    auto m = csv::parse_int(s.substr(5, 2));
    auto d = csv::parse_int(s.substr(8, 2));
    if (!y || !m || !d) return std::nullopt;
    using namespace std::chrono;
    const year_month_day ymd{year{static_cast<int>(*y)}, month{static_cast<unsigned>(*m)},
                             day{static_cast<unsigned>(*d)}};
    if (!ymd.ok()) return std::nullopt;
    return sys_days{ymd}.time_since_epoch().count();
}

}  // namespace detail

inline std::string format_timestamp(TimestampKind kind, std::int64_t stamp) {
    if (kind == TimestampKind::tick) return std::to_string(stamp);
    using namespace std::chrono;
    const year_month_day ymd{sys_days{days{stamp}}};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

/// Reads a `timestamp,value` CSV. Rows are sorted by timestamp; every
/// malformed row is reported with its line number in one error.
inline TimeSeries read_series(std::istream& in, const std::string& name = "<input>") {
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    std::optional<TimestampKind> kind;
    std::vector<std::pair<std::int64_t, double>> rows;
    std::vector<std::string> problems;

    while (std::getline(in, line)) {
        ++lineno;
        if (csv::trim(line).empty()) continue;
        const auto cells = csv::split(line);
        if (!header_seen) {
            header_seen = true;
            if (cells.size() != 2 || cells[0] != "timestamp" || cells[1] != "value") {
                throw DataError(name + ": expected header 'timestamp,value'");
            }
            continue;
        }
        if (cells.size() != 2) {
            problems.push_back("line " + std::to_string(lineno) + ": expected 2 columns");
            continue;
        }
        std::optional<std::int64_t> stamp;
        TimestampKind row_kind = TimestampKind::tick;
        if (auto tick = csv::parse_int(cells[0])) {
            stamp = tick;
        } else if (auto date = detail::parse_iso_date(cells[0])) {
            stamp = date;
            row_kind = TimestampKind::date;
        }
        if (!stamp) {
            problems.push_back("line " + std::to_string(lineno) + ": bad timestamp '" + cells[0] + "'");
            continue;
        }
        if (kind && *kind != row_kind) {
            problems.push_back("line " + std::to_string(lineno) + ": mixes dates and ticks");
            continue;
        }
        kind = row_kind;
        const auto value = csv::parse_double(cells[1]);
        if (!value || !std::isfinite(*value)) {
            problems.push_back("line " + std::to_string(lineno) + ": bad value '" + cells[1] + "'");
            continue;
        }
        if (*value < 0.0) {
            problems.push_back("line " + std::to_string(lineno) + ": negative value " + cells[1]);
            continue;
        }
        rows.emplace_back(*stamp, *value);
    }
    if (!header_seen) throw DataError(name + ": empty file");
    if (!problems.empty()) {
        std::string msg = name + ": rejected rows";
        for (const auto& p : problems) msg += "\n  " + p;
        throw DataError(msg);
    }
    if (rows.empty()) throw DataError(name + ": no data rows");

    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    TimeSeries ts;
    ts.kind = kind.value_or(TimestampKind::tick);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (k > 0 && rows[k].first == rows[k - 1].first) {
            throw DataError(name + ": duplicate timestamp " + format_timestamp(ts.kind, rows[k].first));
        }
        ts.timestamps.push_back(rows[k].first);
        ts.values.push_back(rows[k].second);
    }
    if (ts.size() < 2) throw DataError(name + ": need at least 2 observations");
    return ts;
}

inline TimeSeries load_series(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot open " + path);
    return read_series(in, path);
}

inline void write_series(std::ostream& out, const TimeSeries& ts) {
    out << "timestamp,value\n";
    for (std::size_t k = 0; k < ts.size(); ++k) {
        out << format_timestamp(ts.kind, ts.timestamps[k]) << ',' << csv::format(ts.values[k]) << '\n';
    }
}

enum class GapFill { zero, previous };

inline GapFill parse_gap_fill(std::string_view s) {
    if (s == "zero") return GapFill::zero;
    if (s == "previous") return GapFill::previous;
    throw std::invalid_argument("unknown gap fill '" + std::string(s) + "'");
}

struct PreprocessOptions {
    std::optional<std::int64_t> start;  // inclusive
    std::optional<std::int64_t> end;    // inclusive
    std::size_t smooth = 1;
    GapFill fill = GapFill::zero;
};

/// Crops to [start, end], fills missing timestamps and applies a centered
/// moving average of width `smooth`. Beyond the ends the series is padded
/// with zeros and the divisor stays `smooth`, so (0,3,0) with width 3 gives
/// (1,1,1). Even widths put the extra sample on the left.
inline TimeSeries preprocess(const TimeSeries& series, const PreprocessOptions& opt) {
    if (opt.smooth < 1) throw std::invalid_argument("smoothing width must be >= 1");
    if (series.size() == 0) throw DataError("preprocess: empty series");
    if (opt.start && opt.end && *opt.start > *opt.end) {
        throw DataError("preprocess: window start after end");
    }

    // every tick in the cropped range gets a value; gaps take `fill`
    const auto first = opt.start ? std::max(*opt.start, series.timestamps.front()) : series.timestamps.front();
    const auto last = opt.end ? std::min(*opt.end, series.timestamps.back()) : series.timestamps.back();
    TimeSeries cropped;
    cropped.kind = series.kind;
    std::size_t k = 0;
    double previous = 0.0;
    for (auto t = first; t <= last; ++t) {
        while (k < series.size() && series.timestamps[k] < t) previous = series.values[k++];
        double v = opt.fill == GapFill::zero ? 0.0 : previous;
        if (k < series.size() && series.timestamps[k] == t) v = series.values[k];
        cropped.timestamps.push_back(t);
        cropped.values.push_back(v);
    }
    if (cropped.size() == 0) throw DataError("preprocess: window selects no timestamps");
    if (opt.smooth == 1) return cropped;

    const auto n = static_cast<std::ptrdiff_t>(cropped.size());
    const auto w = static_cast<std::ptrdiff_t>(opt.smooth);
    const std::ptrdiff_t left = w / 2;
    TimeSeries out = cropped;
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        double sum = 0.0;
        for (std::ptrdiff_t j = k - left; j < k - left + w; ++j) {
            if (j >= 0 && j < n) sum += cropped.values[static_cast<std::size_t>(j)];
        }
        out.values[static_cast<std::size_t>(k)] = sum / static_cast<double>(w);
    }
    return out;
}

/// Parses a window bound written like the series' timestamps.
inline std::int64_t parse_timestamp(std::string_view s) {
    if (auto t = csv::parse_int(s)) return *t;
    if (auto d = detail::parse_iso_date(s)) return *d;
    throw DataError("bad timestamp '" + std::string(s) + "'");
}

}  // namespace gsmdg

#endif  // GSMDG_INGEST_HPP

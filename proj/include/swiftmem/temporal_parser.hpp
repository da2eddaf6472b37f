#pragma once

#include <chrono>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "swiftmem/temporal_index.hpp"
#include "swiftmem/types.hpp"

namespace swiftmem {

namespace calendar {

/// Epoch milliseconds at 00:00 UTC of the given civil date; nullopt when the date is invalid.
inline std::optional<Timestamp> day_start(int y, unsigned m, unsigned d) {
    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{m}, day{d}};
    if (!ymd.ok()) return std::nullopt;
    return Timestamp(sys_days{ymd}.time_since_epoch().count()) * kMillisPerDay;
}

inline TimeInterval day_interval(Timestamp start) { return {start, start + kMillisPerDay}; }

inline std::optional<TimeInterval> month_interval(int y, unsigned m) {
    using namespace std::chrono;
    const year_month ym{year{y}, month{m}};
    if (!ym.ok()) return std::nullopt;
    const auto next = ym + months{1};
    const auto a = sys_days{ym / 1}.time_since_epoch().count();
    const auto b = sys_days{next / 1}.time_since_epoch().count();
    return TimeInterval{Timestamp(a) * kMillisPerDay, Timestamp(b) * kMillisPerDay};
}

inline TimeInterval year_interval(int y) { return {*day_start(y, 1, 1), *day_start(y + 1, 1, 1)}; }

struct Civil {
    int year;
    unsigned month;
    unsigned day;
};

inline Civil civil_from(Timestamp ms) {
    using namespace std::chrono;
    Timestamp days = ms / kMillisPerDay;
    if (ms % kMillisPerDay < 0) --days;
    const year_month_day ymd{sys_days{std::chrono::days{days}}};
    return {int(ymd.year()), unsigned(ymd.month()), unsigned(ymd.day())};
}

inline Timestamp floor_day(Timestamp ms) {
    Timestamp days = ms / kMillisPerDay;
    if (ms % kMillisPerDay < 0) --days;
    return days * kMillisPerDay;
}

/// Parses "YYYY-MM-DD" or "YYYY-MM-DDTHH:MM[:SS[.fff]]Z" (UTC only) to epoch ms.
inline std::optional<Timestamp> parse_iso8601(std::string_view s) {
    static const std::regex re(R"(^(\d{4})-(\d{2})-(\d{2})(?:[T ](\d{2}):(\d{2})(?::(\d{2})(?:\.(\d{1,3}))?)?(Z|\+00:00)?)?$)");
    std::match_results<std::string_view::const_iterator> m;
    if (!std::regex_match(s.begin(), s.end(), m, re)) return std::nullopt;
    auto num = [&](int i) { return m[i].matched ? std::stoi(m[i].str()) : 0; };
    auto start = day_start(num(1), unsigned(num(2)), unsigned(num(3)));
    if (!start) return std::nullopt;
    const int hh = num(4), mm = num(5), ss = num(6);
    if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
    Timestamp ms = 0;
    if (m[7].matched) {
        std::string frac = m[7].str();
        frac.resize(3, '0');
        ms = std::stoi(frac);
    }
    return *start + (Timestamp(hh) * 3600 + Timestamp(mm) * 60 + ss) * 1000 + ms;
}

} // namespace calendar

/// Rule-based extraction of explicit time references.
///
/// Recognised: ISO dates (2022-03-16) and months (2022-03); "March 16, 2022",
/// "16 March 2022"; "March 2022"; bare years 1900-2199; "between X and Y" /
/// "from X to Y" over any of those; "yesterday", "today" and "last
/// week|month|year" relative to `reference_now`. Each reference is widened
/// to its natural granularity and the result is merged. Text without any
/// reference yields an empty list.
class TemporalParser {
public:
    std::vector<TimeInterval> parse(std::string_view query, Timestamp reference_now) const {
        std::string s(query);
        for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        std::vector<TimeInterval> found;

        auto blank = [&s](std::size_t pos, std::size_t len) { s.replace(pos, len, std::string(len, ' ')); };

        for (const std::regex* re : {&range_between_, &range_from_}) {
            for (std::smatch m; std::regex_search(s, m, *re);) {
                auto a = parse_atom(m[1].str());
                auto b = parse_atom(m[2].str());
                if (a && b && a->start < b->end) found.emplace_back(a->start, b->end);
                blank(std::size_t(m.position(0)), std::size_t(m.length(0)));
            }
        }

        for (std::size_t from = 0;;) {
            std::smatch m;
            std::string tail = s.substr(from);
            if (!std::regex_search(tail, m, atom_)) break;
            const std::size_t pos = from + std::size_t(m.position(0));
            if (auto iv = parse_atom(m.str(0))) {
                found.push_back(*iv);
                blank(pos, std::size_t(m.length(0)));
            }
            from = pos + std::size_t(std::max<std::ptrdiff_t>(m.length(0), 1));
        }

        const Timestamp today = calendar::floor_day(reference_now);
        const auto now_civil = calendar::civil_from(reference_now);
        for (std::smatch m; std::regex_search(s, m, relative_);) {
            const std::string what = m[1].matched ? m[1].str() : m[0].str();
            if (what == "yesterday") {
                found.push_back(calendar::day_interval(today - kMillisPerDay));
            } else if (what == "today") {
                found.push_back(calendar::day_interval(today));
            } else if (what == "week") {
                found.emplace_back(today - 7 * kMillisPerDay, today);
            } else if (what == "month") {
                int y = now_civil.year;
                unsigned mo = now_civil.month;
                if (mo == 1) {
                    --y;
                    mo = 12;
                } else {
                    --mo;
                }
                found.push_back(*calendar::month_interval(y, mo));
            } else if (what == "year") {
                found.push_back(calendar::year_interval(now_civil.year - 1));
            }
            blank(std::size_t(m.position(0)), std::size_t(m.length(0)));
        }
        return TemporalIndex::merge_intervals(std::move(found));
    }

    /// Interval for a single date expression matching the whole of `text`.
    std::optional<TimeInterval> parse_atom(const std::string& text) const {
        std::smatch m;
        if (!std::regex_match(text, m, atom_capture_)) return std::nullopt;
        auto num = [&](int i) { return std::stoi(m[i].str()); };
        if (m[1].matched) { // yyyy-mm-dd
            auto d = calendar::day_start(num(1), unsigned(num(2)), unsigned(num(3)));
            if (!d) return std::nullopt;
            return calendar::day_interval(*d);
        }
        if (m[4].matched) { // month d, yyyy
            auto d = calendar::day_start(num(6), month_number(m[4].str()), unsigned(num(5)));
            if (!d) return std::nullopt;
            return calendar::day_interval(*d);
        }
        if (m[7].matched) { // d month yyyy
            auto d = calendar::day_start(num(9), month_number(m[8].str()), unsigned(num(7)));
            if (!d) return std::nullopt;
            return calendar::day_interval(*d);
        }
        if (m[10].matched) return calendar::month_interval(num(11), month_number(m[10].str())); // month yyyy
        if (m[12].matched) { // yyyy-mm
            if (!plausible_year(num(12))) return std::nullopt;
            return calendar::month_interval(num(12), unsigned(num(13)));
        }
        if (m[14].matched) { // yyyy
            if (!plausible_year(num(14))) return std::nullopt;
            return calendar::year_interval(num(14));
        }
        return std::nullopt;
    }

private:
    static bool plausible_year(int y) { return y >= 1900 && y <= 2199; }

    static unsigned month_number(const std::string& name) {
        static constexpr std::string_view prefixes[] = {"jan", "feb", "mar", "apr", "may", "jun",
                                                        "jul", "aug", "sep", "oct", "nov", "dec"};
        for (unsigned i = 0; i < 12; ++i)
            if (name.compare(0, 3, prefixes[i]) == 0) return i + 1;
        return 0;
    }

    static std::string month_re() {
        return "(?:january|february|march|april|may|june|july|august|september|october|november|december|"
               "jan|feb|mar|apr|jun|jul|aug|sept|sep|oct|nov|dec)\\.?";
    }

    static std::string atom_pattern(bool capture) {
        auto g = [capture](const std::string& x) { return (capture ? "(" : "(?:") + x + ")"; };
        const std::string month = month_re();
        const std::string ord = "(?:st|nd|rd|th)?";
        const std::string yyyy = "\\d{4}", dd = "\\d{1,2}";
        return "(?:" + g(yyyy) + "-" + g(dd) + "-" + g(dd) +                       // 2022-03-16
               "|" + g(month) + "\\s+" + g(dd) + ord + ",?\\s+" + g(yyyy) +      // march 16, 2022
               "|" + g(dd) + ord + "\\s+" + g(month) + ",?\\s+" + g(yyyy) +      // 16 march 2022
               "|" + g(month) + ",?\\s+" + g(yyyy) +                             // march 2022
               "|" + g(yyyy) + "-" + g(dd) +                                      // 2022-03
               "|" + g(yyyy) + ")";                                               // 2022
    }

    const std::regex atom_capture_{"^" + atom_pattern(true) + "$"};
    const std::regex atom_{"\\b" + atom_pattern(false) + "\\b"};
    const std::regex range_between_{"\\bbetween\\s+(" + atom_pattern(false) + ")\\s+(?:and|&)\\s+(" +
                                    atom_pattern(false) + ")\\b"};
    const std::regex range_from_{"\\bfrom\\s+(" + atom_pattern(false) + ")\\s+(?:to|until|till|through)\\s+(" +
                                 atom_pattern(false) + ")\\b"};
    const std::regex relative_{"\\b(?:last\\s+(week|month|year)|yesterday|today)\\b"};
};

inline std::vector<TimeInterval> parse_temporal(std::string_view query, Timestamp reference_now) {
    static const TemporalParser parser;
    return parser.parse(query, reference_now);
}

} // namespace swiftmem

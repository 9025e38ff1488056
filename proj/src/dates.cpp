#include "hfspill/dates.hpp"

#include <charconv>
#include <cstdio>

#include "hfspill/error.hpp"

namespace hfspill {

namespace {

int parse_fixed(std::string_view text, std::string_view whole) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ValidationError("unparseable date '" + std::string(whole) + "'");
    }
    return value;
}

}  // namespace

int days_in_month(int year, int month) {
    static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (month == 2 && ((year % 4 == 0 && year % 100 != 0) || year % 400 == 0)) return 29;
    return kDays[month - 1];
}

Month Month::from_index(int idx) {
    return Month{idx / 12, idx % 12 + 1};
}

Month Month::parse(std::string_view text) {
    if (text.size() != 7 || text[4] != '-') {
        throw ValidationError("unparseable date '" + std::string(text) + "' (expected YYYY-MM)");
    }
    Month m{parse_fixed(text.substr(0, 4), text), parse_fixed(text.substr(5, 2), text)};
    if (m.month < 1 || m.month > 12) {
        throw ValidationError("unparseable date '" + std::string(text) + "' (month out of range)");
    }
    return m;
}

std::string Month::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
    return buf;
}

Date Date::parse(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw ValidationError("unparseable date '" + std::string(text) + "' (expected YYYY-MM-DD)");
    }
    Date d{parse_fixed(text.substr(0, 4), text), parse_fixed(text.substr(5, 2), text),
           parse_fixed(text.substr(8, 2), text)};
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > days_in_month(d.year, d.month)) {
        throw ValidationError("unparseable date '" + std::string(text) + "' (out of range)");
    }
    return d;
}

std::string Date::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
    return buf;
}

}  // namespace hfspill

#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace hfspill {

/// Calendar month, the time index of the country panel.
struct Month {
    int year = 1970;
    int month = 1;  // 1..12

    auto operator<=>(const Month&) const = default;

    /// Months since year 0; consecutive months differ by exactly one.
    int index() const { return year * 12 + (month - 1); }
    static Month from_index(int idx);
    Month next() const { return from_index(index() + 1); }

    /// Parses YYYY-MM.
    static Month parse(std::string_view text);
    std::string to_string() const;
};

/// Announcement date (YYYY-MM-DD).
struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    auto operator<=>(const Date&) const = default;

    Month month_of() const { return Month{year, month}; }

    static Date parse(std::string_view text);
    std::string to_string() const;
};

int days_in_month(int year, int month);

}  // namespace hfspill

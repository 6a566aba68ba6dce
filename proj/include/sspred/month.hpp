#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace sspred {

/// Calendar month as an integer count (year * 12 + month - 1).
struct Month {
    int index = 0;

    static Month from_ym(int year, int month);
    /// Parses "YYYY-MM". Throws ValidationError on malformed text.
    static Month parse(std::string_view text);

    int year() const;
    int month_of_year() const;  // 1..12
    std::string str() const;

    Month operator+(int months) const { return Month{index + months}; }
    Month operator-(int months) const { return Month{index - months}; }
    int operator-(Month other) const { return index - other.index; }
    Month& operator++() {
        ++index;
        return *this;
    }
    auto operator<=>(const Month&) const = default;
};

}  // namespace sspred

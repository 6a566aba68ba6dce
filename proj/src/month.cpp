#include "sspred/month.hpp"

#include <charconv>
#include <cstdio>

#include "sspred/errors.hpp"

namespace sspred {

namespace {

int floor_div(int a, int b) {
    int q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

}  // namespace

Month Month::from_ym(int year, int month) {
    if (month < 1 || month > 12) {
        throw ValidationError("month of year out of range: " + std::to_string(month));
    }
    return Month{year * 12 + (month - 1)};
}

Month Month::parse(std::string_view text) {
    auto fail = [&] { throw ValidationError("malformed month '" + std::string(text) + "', expected YYYY-MM"); };
    if (text.size() != 7 || text[4] != '-') fail();
    int year = 0;
    int month = 0;
    auto r1 = std::from_chars(text.data(), text.data() + 4, year);
    auto r2 = std::from_chars(text.data() + 5, text.data() + 7, month);
    if (r1.ec != std::errc{} || r1.ptr != text.data() + 4 || r2.ec != std::errc{} || r2.ptr != text.data() + 7) {
        fail();
    }
    if (month < 1 || month > 12) fail();
    return from_ym(year, month);
}

int Month::year() const { return floor_div(index, 12); }

int Month::month_of_year() const { return index - year() * 12 + 1; }

std::string Month::str() const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02d", year(), month_of_year());
    return buf;
}

}  // namespace sspred

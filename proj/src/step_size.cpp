#include "sdelong/step_size.hpp"

#include "sdelong/core.hpp"

#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

namespace sdelong {

namespace {

using Wide = __int128;

[[noreturn]] void malformed(std::string_view text, const char* why) {
    throw UsageError("invalid step size '" + std::string(text) + "': " + why);
}

Rational reduce(Wide num, Wide den, std::string_view text) {
    if (den == 0) malformed(text, "division by zero");
    Wide a = num < 0 ? -num : num;
    Wide b = den;
    while (b != 0) {
        const Wide t = a % b;
        a = b;
        b = t;
    }
    if (a > 1) {
        num /= a;
        den /= a;
    }
    constexpr Wide limit = std::numeric_limits<std::int64_t>::max();
    if (num > limit || den > limit) malformed(text, "too many digits");
    return {static_cast<std::int64_t>(num), static_cast<std::int64_t>(den)};
}

Wide checked_mul(Wide a, Wide b, std::string_view text) {
    constexpr Wide limit = static_cast<Wide>(1) << 100;
    if (a != 0 && b > limit / a) malformed(text, "too many digits");
    return a * b;
}

/// decimal ['^' [-]integer]
Rational parse_term(std::string_view term, std::string_view text) {
    const auto caret = term.find('^');
    const std::string_view base = term.substr(0, caret);
    if (base.empty()) malformed(text, "missing number");

    Wide num = 0;
    Wide den = 1;
    bool seen_point = false;
    bool seen_digit = false;
    for (char c : base) {
        if (c == '.') {
            if (seen_point) malformed(text, "two decimal points");
            seen_point = true;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            seen_digit = true;
            num = checked_mul(num, 10, text) + (c - '0');
            if (seen_point) den = checked_mul(den, 10, text);
        } else {
            malformed(text, "unexpected character");
        }
    }
    if (!seen_digit) malformed(text, "missing digits");

    if (caret != std::string_view::npos) {
        std::string_view exponent = term.substr(caret + 1);
        bool negative = false;
        if (!exponent.empty() && (exponent.front() == '-' || exponent.front() == '+')) {
            negative = exponent.front() == '-';
            exponent.remove_prefix(1);
        }
        if (exponent.empty()) malformed(text, "missing exponent");
        int power = 0;
        for (char c : exponent) {
            if (!std::isdigit(static_cast<unsigned char>(c))) malformed(text, "exponent must be an integer");
            power = power * 10 + (c - '0');
            if (power > 62) malformed(text, "exponent too large");
        }
        Wide base_num = num;
        Wide base_den = den;
        num = 1;
        den = 1;
        for (int i = 0; i < power; ++i) {
            num = checked_mul(num, base_num, text);
            den = checked_mul(den, base_den, text);
        }
        if (negative) std::swap(num, den);
    }
    return reduce(num, den, text);
}

/// value = mantissa * 2^exponent with an odd mantissa.
void decompose(double value, std::int64_t& mantissa, int& exponent) noexcept {
    int e = 0;
    const double fraction = std::frexp(value, &e);
    mantissa = static_cast<std::int64_t>(std::ldexp(fraction, 53));
    exponent = e - 53;
    while (mantissa != 0 && (mantissa & 1) == 0) {
        mantissa >>= 1;
        ++exponent;
    }
}

}  // namespace

Rational parse_rational(std::string_view text) {
    std::string_view trimmed = text;
    while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.front()))) trimmed.remove_prefix(1);
    while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.back()))) trimmed.remove_suffix(1);
    if (trimmed.empty()) malformed(text, "empty");

    const auto slash = trimmed.find('/');
    if (slash == std::string_view::npos) return parse_term(trimmed, text);
    const Rational top = parse_term(trimmed.substr(0, slash), text);
    const Rational bottom = parse_term(trimmed.substr(slash + 1), text);
    if (bottom.num == 0) malformed(text, "division by zero");
    return reduce(static_cast<Wide>(top.num) * bottom.den, static_cast<Wide>(top.den) * bottom.num, text);
}

double parse_step(std::string_view text) {
    const double value = parse_rational(text).value();
    if (!(value > 0.0)) malformed(text, "must be positive");
    return value;
}

std::vector<double> parse_step_list(std::string_view text) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto piece = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        out.push_back(parse_step(piece));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::optional<std::int64_t> exact_multiple(double value, double unit) noexcept {
    if (!(value > 0.0) || !(unit > 0.0) || !std::isfinite(value) || !std::isfinite(unit)) return std::nullopt;
    std::int64_t value_mantissa = 0, unit_mantissa = 0;
    int value_exponent = 0, unit_exponent = 0;
    decompose(value, value_mantissa, value_exponent);
    decompose(unit, unit_mantissa, unit_exponent);

    // Both mantissas are odd, so the quotient is an integer only if the unit
    // mantissa divides the value mantissa and the binary shift is non-negative.
    const int shift = value_exponent - unit_exponent;
    if (shift < 0 || value_mantissa % unit_mantissa != 0) return std::nullopt;
    const std::int64_t odd = value_mantissa / unit_mantissa;
    if (shift > 62 || odd > (std::numeric_limits<std::int64_t>::max() >> shift)) return std::nullopt;
    return odd << shift;
}

}  // namespace sdelong

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sdelong {

/// Exact non-negative rational read from text such as "15/2^10", "2^-7",
/// "0.125" or "16".
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    /// Nearest binary double (one correctly rounded division).
    double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
};

/// Grammar: term ['/' term], term := decimal ['^' [-]integer].
/// Throws UsageError on malformed input or int64 overflow.
Rational parse_rational(std::string_view text);

/// parse_rational(text).value().
double parse_step(std::string_view text);

/// Comma-separated list of parse_step values.
std::vector<double> parse_step_list(std::string_view text);

/// n such that value == n * unit holds exactly for the two binary doubles,
/// or nullopt. Both arguments must be positive and finite.
std::optional<std::int64_t> exact_multiple(double value, double unit) noexcept;

constexpr bool is_power_of_two(std::int64_t n) noexcept { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace sdelong

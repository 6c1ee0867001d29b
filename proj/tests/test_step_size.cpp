#include "sdelong/core.hpp"
#include "sdelong/step_size.hpp"

#include <gtest/gtest.h>

using namespace sdelong;

TEST(ParseRational, AcceptsDyadicAndDecimalForms) {
    EXPECT_EQ(parse_step("2^-7"), 1.0 / 128);
    EXPECT_EQ(parse_step("0.125"), 0.125);
    EXPECT_EQ(parse_step("16"), 16.0);
    EXPECT_EQ(parse_step(" 1/8 "), 0.125);
    EXPECT_EQ(parse_step("15/2^10"), 15.0 / 1024);
    const Rational r = parse_rational("30/2^12");
    EXPECT_EQ(r.num, 15);
    EXPECT_EQ(r.den, 2048);
}

TEST(ParseRational, RejectsMalformedInput) {
    for (const char* bad : {"", "abc", "1/0", "2^", "1..2", "-1", "0", "2^x", "1/2/3"}) {
        EXPECT_THROW(parse_step(bad), UsageError) << bad;
    }
}

TEST(ParseStepList, SplitsOnCommas) {
    const auto hs = parse_step_list("2^-7,2^-6, 0.25");
    ASSERT_EQ(hs.size(), 3u);
    EXPECT_EQ(hs[0], 1.0 / 128);
    EXPECT_EQ(hs[2], 0.25);
    EXPECT_THROW(parse_step_list("0.1,,0.2"), UsageError);
}

TEST(ExactMultiple, DecimalStepsAreCheckedOnTheirBinaryValues) {
    EXPECT_EQ(exact_multiple(0.1, 0.05), 2);
    EXPECT_FALSE(exact_multiple(0.3, 0.05).has_value());
    EXPECT_FALSE(exact_multiple(0.05, 0.1).has_value());
}

TEST(ExactMultiple, NonDyadicLadderIsExact) {
    const double ref = parse_step("15/2^12");
    for (int k = 6; k <= 10; ++k) {
        const double h = parse_step("15/2^" + std::to_string(k));
        EXPECT_EQ(exact_multiple(h, ref), std::int64_t{1} << (12 - k));
    }
    EXPECT_EQ(exact_multiple(30.0, ref), 8192);
    EXPECT_EQ(exact_multiple(16.0, 1.0 / 4096), 65536);
    EXPECT_EQ(exact_multiple(0.75, 0.25), 3);
}

TEST(ExactMultiple, RejectsNonPositive) {
    EXPECT_FALSE(exact_multiple(0.0, 1.0).has_value());
    EXPECT_FALSE(exact_multiple(1.0, -1.0).has_value());
}

TEST(PowerOfTwo, Basics) {
    EXPECT_TRUE(is_power_of_two(1));
    EXPECT_TRUE(is_power_of_two(64));
    EXPECT_FALSE(is_power_of_two(3));
    EXPECT_FALSE(is_power_of_two(0));
}

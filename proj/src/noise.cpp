#include "sdelong/noise.hpp"

#include "sdelong/core.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace sdelong {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85;
constexpr int kPhiloxRounds = 10;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) noexcept {
    const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    lo = static_cast<std::uint32_t>(product);
    hi = static_cast<std::uint32_t>(product >> 32);
}

inline Philox4x32::Counter philox_round(const Philox4x32::Counter& c, const Philox4x32::Key& k) noexcept {
    std::uint32_t lo0, hi0, lo1, hi1;
    mulhilo(kPhiloxM0, c[0], lo0, hi0);
    mulhilo(kPhiloxM1, c[2], lo1, hi1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

inline std::uint32_t lo32(std::uint64_t v) noexcept { return static_cast<std::uint32_t>(v); }
inline std::uint32_t hi32(std::uint64_t v) noexcept { return static_cast<std::uint32_t>(v >> 32); }

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter counter, Key key) noexcept {
    counter = philox_round(counter, key);
    for (int r = 1; r < kPhiloxRounds; ++r) {
        key[0] += kPhiloxW0;
        key[1] += kPhiloxW1;
        counter = philox_round(counter, key);
    }
    return counter;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (tag + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::array<std::uint64_t, 2> CounterStream::words(std::uint64_t block) const noexcept {
    const auto out = Philox4x32::generate({lo32(block), hi32(block), lo32(stream_), hi32(stream_)},
                                          {lo32(seed_), hi32(seed_)});
    return {(static_cast<std::uint64_t>(out[1]) << 32) | out[0],
            (static_cast<std::uint64_t>(out[3]) << 32) | out[2]};
}

double CounterStream::uniform(std::uint64_t index) const noexcept {
    const auto w = words(index / 2);
    return static_cast<double>((w[index % 2] >> 11) + 1) * 0x1.0p-53;
}

std::array<double, 2> CounterStream::normal_pair(std::uint64_t block) const noexcept {
    const auto w = words(block);
    const double u1 = static_cast<double>((w[0] >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = static_cast<double>(w[1] >> 11) * 0x1.0p-53;        // [0, 1)
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(angle), r * std::sin(angle)};
}

double CounterStream::normal(std::uint64_t index) const noexcept {
    return normal_pair(index / 2)[index % 2];
}

void CounterStream::fill_normals(std::span<double> out) const noexcept {
    const std::size_t n = out.size();
    std::size_t i = 0;
    for (std::uint64_t block = 0; i + 1 < n; ++block, i += 2) {
        const auto z = normal_pair(block);
        out[i] = z[0];
        out[i + 1] = z[1];
    }
    if (i < n) out[i] = normal_pair(i / 2)[0];
}

NoiseGrid make_noise_grid(std::uint64_t master_seed, std::uint64_t path_index, int m, double h_fine,
                          std::int64_t n_fine) {
    if (!(h_fine > 0.0) || !std::isfinite(h_fine)) throw UsageError("noise grid: h_fine must be positive");
    if (n_fine < 1) throw UsageError("noise grid: n_fine must be at least 1");
    if (m < 1) throw UsageError("noise grid: noise dimension must be at least 1");

    NoiseGrid grid;
    grid.master_seed = master_seed;
    grid.increments.rows = n_fine;
    grid.increments.m = m;
    grid.increments.h = h_fine;
    grid.increments.values.resize(static_cast<std::size_t>(n_fine) * m);
    regenerate(grid, path_index);
    return grid;
}

void regenerate(NoiseGrid& grid, std::uint64_t path_index) {
    grid.path_index = path_index;
    auto& values = grid.increments.values;
    CounterStream(grid.master_seed, path_index).fill_normals(values);
    const double scale = std::sqrt(grid.increments.h);
    for (double& v : values) v *= scale;
}

double pairwise_sum(const double* first, std::int64_t count, std::int64_t stride) noexcept {
    if (count <= 0) return 0.0;
    if (count == 1) return first[0];
    if (count == 2) return first[0] + first[stride];
    const std::int64_t half = count / 2;
    return pairwise_sum(first, half, stride) + pairwise_sum(first + half * stride, count - half, stride);
}

void coarsen_into(const IncrementArray& fine, std::int64_t factor, IncrementArray& out) {
    if (factor < 1 || fine.rows % factor != 0) {
        throw UsageError("coarsen: factor " + std::to_string(factor) + " does not divide " +
                         std::to_string(fine.rows) + " fine steps");
    }
    out.rows = fine.rows / factor;
    out.m = fine.m;
    out.h = fine.h * static_cast<double>(factor);
    out.values.resize(static_cast<std::size_t>(out.rows) * out.m);
    for (std::int64_t k = 0; k < out.rows; ++k) {
        const double* block = fine.values.data() + k * factor * fine.m;
        for (int j = 0; j < fine.m; ++j) {
            out.values[k * out.m + j] = pairwise_sum(block + j, factor, fine.m);
        }
    }
}

IncrementArray coarsen(const IncrementArray& fine, std::int64_t factor) {
    IncrementArray out;
    coarsen_into(fine, factor, out);
    return out;
}

}  // namespace sdelong

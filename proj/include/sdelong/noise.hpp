#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace sdelong {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3"). A keyed bijection on 128-bit counters; no state.
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter generate(Counter counter, Key key) noexcept;
};

/// SplitMix64 finalizer, used to derive independent seeds from a master seed
/// and a tag.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) noexcept;

/// Random-access stream of variates keyed by (seed, stream).
///
/// Block `b` of the stream is Philox(counter = (b, stream), key = seed), so
/// any entry can be regenerated without touching the others.
class CounterStream {
public:
    CounterStream(std::uint64_t seed, std::uint64_t stream) noexcept : seed_(seed), stream_(stream) {}

    /// Two 64-bit words from block `block`.
    std::array<std::uint64_t, 2> words(std::uint64_t block) const noexcept;

    /// Uniform on (0, 1] built from the top 53 bits of word `index`.
    double uniform(std::uint64_t index) const noexcept;

    /// Two independent standard normals (Box-Muller) from block `block`.
    std::array<double, 2> normal_pair(std::uint64_t block) const noexcept;

    /// Standard normal number `index` (component index % 2 of block index / 2).
    double normal(std::uint64_t index) const noexcept;

    /// Fills `out` with standard normals 0 .. out.size() - 1.
    void fill_normals(std::span<double> out) const noexcept;

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
};

/// Row-major array of Brownian increments: `rows` time steps of width `h`,
/// `m` noise components each.
struct IncrementArray {
    std::int64_t rows = 0;
    int m = 1;
    double h = 0.0;
    std::vector<double> values;

    std::span<const double> row(std::int64_t k) const {
        return {values.data() + k * m, static_cast<std::size_t>(m)};
    }
    double operator()(std::int64_t k, int j) const { return values[k * m + j]; }
};

/// Finest-level increments of one Monte Carlo path.
struct NoiseGrid {
    std::uint64_t master_seed = 0;
    std::uint64_t path_index = 0;
    IncrementArray increments;

    int m() const noexcept { return increments.m; }
    double h_fine() const noexcept { return increments.h; }
    std::int64_t n_fine() const noexcept { return increments.rows; }
};

/// Draws n_fine x m independent N(0, h_fine) increments from the substream
/// (master_seed, path_index).
NoiseGrid make_noise_grid(std::uint64_t master_seed, std::uint64_t path_index, int m, double h_fine,
                          std::int64_t n_fine);

/// Regenerates `grid` in place for another path, reusing its storage.
void regenerate(NoiseGrid& grid, std::uint64_t path_index);

/// Balanced-tree sum of `count` values spaced `stride` apart. The tree splits
/// at count / 2, so for power-of-two block sizes nested coarsenings reproduce
/// the same floating-point sum bit for bit.
double pairwise_sum(const double* first, std::int64_t count, std::int64_t stride = 1) noexcept;

inline double pairwise_sum(std::span<const double> values) noexcept {
    return pairwise_sum(values.data(), static_cast<std::int64_t>(values.size()));
}

/// Sums consecutive blocks of `factor` rows. Throws UsageError unless
/// `factor` divides the row count.
IncrementArray coarsen(const IncrementArray& fine, std::int64_t factor);

inline IncrementArray coarsen(const NoiseGrid& grid, std::int64_t factor) {
    return coarsen(grid.increments, factor);
}

/// In-place variant for hot loops; `out` is resized as needed.
void coarsen_into(const IncrementArray& fine, std::int64_t factor, IncrementArray& out);

}  // namespace sdelong

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rqmc/matrix.hpp"

namespace rqmc {

enum class Sampler { MC, Sobol, SobolScrambled, Halton, HaltonShifted, LHS };

const char* sampler_name(Sampler s);
std::optional<Sampler> sampler_from_name(const std::string& name);
bool sampler_is_randomized(Sampler s);

// N x d points in [0,1)^d plus the provenance needed to regenerate them.
struct PointSet {
    Matrix points;  // n rows, d cols
    Sampler sampler = Sampler::MC;
    std::uint64_t seed = 0;
    std::size_t n = 0;
    std::size_t d = 0;
};

// One primitive polynomial plus initial direction integers per dimension.
// Dimension 1 is the van der Corput sequence and is implicit.
struct DirectionNumberTable {
    struct Entry {
        unsigned degree = 0;
        unsigned poly_coeffs = 0;        // middle coefficients, Joe-Kuo "a"
        std::vector<std::uint32_t> m;    // initial direction integers
    };
    std::vector<Entry> entries;          // entries[k] is dimension k+2

    std::size_t max_dim() const { return entries.size() + 1; }
};

// Parses the de-facto Joe-Kuo layout: one line "d s a m_1 ... m_s" per
// dimension, '#' comments allowed. Throws std::runtime_error on bad input.
DirectionNumberTable parse_direction_table(const std::string& text);
DirectionNumberTable load_direction_table(const std::string& path);
const DirectionNumberTable& default_direction_table();

double radical_inverse(std::uint64_t index, std::uint32_t base);

PointSet mc_points(std::uint64_t seed, std::size_t n, std::size_t d);
PointSet sobol_points(std::size_t n, std::size_t d,
                      std::optional<std::uint64_t> scramble_seed = std::nullopt,
                      const DirectionNumberTable& table = default_direction_table());
PointSet halton_points(std::size_t n, std::size_t d,
                       std::optional<std::uint64_t> shift_seed = std::nullopt);
PointSet lhs_points(std::uint64_t seed, std::size_t n, std::size_t d);

// Uniform dispatcher used by the experiment harness; `seed` is ignored by
// the deterministic samplers.
PointSet generate_points(Sampler sampler, std::uint64_t seed, std::size_t n, std::size_t d);

}  // namespace rqmc

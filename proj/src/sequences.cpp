#include "rqmc/sequences.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rqmc/parallel.hpp"
#include "rqmc/rng.hpp"

namespace rqmc {

namespace {
#include "sobol_table_data.inc"

constexpr int kSobolBits = 32;    // index depth, n <= 2^32
constexpr int kOutputBits = 53;   // double mantissa; deeper digits are zero

std::vector<std::uint32_t> first_primes(std::size_t count) {
    std::vector<std::uint32_t> primes;
    for (std::uint32_t c = 2; primes.size() < count; ++c) {
        bool is_prime = true;
        for (std::uint32_t p : primes) {
            if (p * p > c) break;
            if (c % p == 0) { is_prime = false; break; }
        }
        if (is_prime) primes.push_back(c);
    }
    return primes;
}

// Direction vectors for one dimension, bit k-1 aligned so that
// V[k-1] >> (32-k) recovers m_k. dim is 1-based; dim 1 is van der Corput.
std::vector<std::uint32_t> direction_vectors(const DirectionNumberTable& table, std::size_t dim) {
    std::vector<std::uint32_t> v(kSobolBits);
    if (dim == 1) {
        for (int k = 0; k < kSobolBits; ++k) v[k] = 1u << (31 - k);
        return v;
    }
    const auto& e = table.entries.at(dim - 2);
    const unsigned s = e.degree;
    for (unsigned k = 0; k < s && k < kSobolBits; ++k) v[k] = e.m[k] << (31 - k);
    for (unsigned k = s; k < kSobolBits; ++k) {
        std::uint32_t val = v[k - s] ^ (v[k - s] >> s);
        for (unsigned i = 1; i < s; ++i)
            if ((e.poly_coeffs >> (s - 1 - i)) & 1u) val ^= v[k - i];
        v[k] = val;
    }
    return v;
}

// Owen nested uniform scramble of one coordinate, realized per digit with a
// counter-based hash keyed by (seed, dimension, digit index, digit prefix).
// The flip of output digit j depends only on the first j-1 input digits, so
// every dyadic cell maps bijectively and the net structure survives.
std::uint64_t owen_scramble(std::uint32_t x, std::uint64_t seed, std::uint64_t dim) {
    std::uint64_t y = 0;
    for (int j = 1; j <= kOutputBits; ++j) {
        const std::uint64_t bit = j <= kSobolBits ? (x >> (kSobolBits - j)) & 1u : 0u;
        const int plen = j - 1;
        const std::uint64_t prefix =
            plen <= kSobolBits ? (plen == 0 ? 0 : static_cast<std::uint64_t>(x) >> (kSobolBits - plen))
                               : static_cast<std::uint64_t>(x) << (plen - kSobolBits);
        const std::uint64_t flip = derive_seed(seed, dim, static_cast<std::uint64_t>(plen), prefix) & 1u;
        y = (y << 1) | (bit ^ flip);
    }
    return y;
}

}  // namespace

const char* sampler_name(Sampler s) {
    switch (s) {
        case Sampler::MC: return "mc";
        case Sampler::Sobol: return "sobol";
        case Sampler::SobolScrambled: return "sobol_scrambled";
        case Sampler::Halton: return "halton";
        case Sampler::HaltonShifted: return "halton_shifted";
        case Sampler::LHS: return "lhs";
    }
    return "?";
}

std::optional<Sampler> sampler_from_name(const std::string& name) {
    for (Sampler s : {Sampler::MC, Sampler::Sobol, Sampler::SobolScrambled,
                      Sampler::Halton, Sampler::HaltonShifted, Sampler::LHS})
        if (name == sampler_name(s)) return s;
    return std::nullopt;
}

bool sampler_is_randomized(Sampler s) {
    return s != Sampler::Sobol && s != Sampler::Halton;
}

DirectionNumberTable parse_direction_table(const std::string& text) {
    DirectionNumberTable table;
    std::istringstream in(text);
    std::string line;
    std::size_t expected_dim = 2;
    while (std::getline(in, line)) {
        const auto pos = line.find('#');
        if (pos != std::string::npos) line.erase(pos);
        std::istringstream ls(line);
        std::size_t dim = 0;
        if (!(ls >> dim)) continue;  // blank or comment-only line
        unsigned s = 0, a = 0;
        if (!(ls >> s >> a)) throw std::runtime_error("direction table: malformed line: " + line);
        if (dim != expected_dim)
            throw std::runtime_error("direction table: expected dimension " +
                                     std::to_string(expected_dim) + ", got " + std::to_string(dim));
        DirectionNumberTable::Entry e;
        e.degree = s;
        e.poly_coeffs = a;
        for (unsigned k = 1; k <= s; ++k) {
            std::uint32_t m = 0;
            if (!(ls >> m)) throw std::runtime_error("direction table: missing m value: " + line);
            if (m % 2 == 0 || m >= (1u << k))
                throw std::runtime_error("direction table: invalid m value: " + line);
            e.m.push_back(m);
        }
        table.entries.push_back(std::move(e));
        ++expected_dim;
    }
    if (table.entries.empty()) throw std::runtime_error("direction table: no entries");
    return table;
}

DirectionNumberTable load_direction_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open direction table: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_direction_table(buf.str());
}

const DirectionNumberTable& default_direction_table() {
    static const DirectionNumberTable table = parse_direction_table(kDefaultDirectionData);
    return table;
}

double radical_inverse(std::uint64_t index, std::uint32_t base) {
    if (base < 2) throw std::invalid_argument("radical_inverse: base must be >= 2");
    double result = 0.0;
    double digit_weight = 1.0 / base;
    while (index > 0) {
        result += digit_weight * static_cast<double>(index % base);
        index /= base;
        digit_weight /= base;
    }
    return result;
}

PointSet mc_points(std::uint64_t seed, std::size_t n, std::size_t d) {
    if (n < 1 || d < 1) throw std::invalid_argument("mc_points: n and d must be >= 1");
    PointSet ps{Matrix(n, d), Sampler::MC, seed, n, d};
    Rng rng(derive_seed(seed, 0x4d43));  // one sequential stream per seed
    for (double& v : ps.points.data()) v = rng.next_double();
    return ps;
}

PointSet sobol_points(std::size_t n, std::size_t d, std::optional<std::uint64_t> scramble_seed,
                      const DirectionNumberTable& table) {
    if (n < 1 || (n & (n - 1)) != 0)
        throw std::invalid_argument("sobol_points: n must be a power of 2 (net balance)");
    if (d < 1 || d > table.max_dim())
        throw std::invalid_argument("sobol_points: dimension exceeds direction table (max " +
                                    std::to_string(table.max_dim()) + ")");
    PointSet ps{Matrix(n, d), scramble_seed ? Sampler::SobolScrambled : Sampler::Sobol,
                scramble_seed.value_or(0), n, d};

    std::vector<std::vector<std::uint32_t>> v(d);
    for (std::size_t j = 0; j < d; ++j) v[j] = direction_vectors(table, j + 1);

    // Gray-code enumeration of the integer states, one column at a time.
    std::vector<std::uint32_t> state(n);
    for (std::size_t j = 0; j < d; ++j) {
        std::uint32_t x = 0;
        state[0] = 0;
        for (std::size_t i = 1; i < n; ++i) {
            x ^= v[j][std::countr_zero(i)];
            state[i] = x;
        }
        if (scramble_seed) {
            const std::uint64_t seed = *scramble_seed;
            parallel_for(n, n >= 4096, [&](std::size_t i) {
                ps.points(i, j) =
                    static_cast<double>(owen_scramble(state[i], seed, j)) * 0x1.0p-53;
            });
        } else {
            for (std::size_t i = 0; i < n; ++i)
                ps.points(i, j) = static_cast<double>(state[i]) * 0x1.0p-32;
        }
    }
    return ps;
}

PointSet halton_points(std::size_t n, std::size_t d, std::optional<std::uint64_t> shift_seed) {
    if (n < 1) throw std::invalid_argument("halton_points: n must be >= 1");
    if (d < 1 || d > 64) throw std::invalid_argument("halton_points: d must be in [1, 64]");
    static const std::vector<std::uint32_t> primes = first_primes(64);
    PointSet ps{Matrix(n, d), shift_seed ? Sampler::HaltonShifted : Sampler::Halton,
                shift_seed.value_or(0), n, d};
    std::vector<double> shift(d, 0.0);
    if (shift_seed)
        for (std::size_t j = 0; j < d; ++j) shift[j] = Rng(derive_seed(*shift_seed, j)).next_double();
    parallel_for(n, n >= 8192, [&](std::size_t i) {
        for (std::size_t j = 0; j < d; ++j) {
            double x = radical_inverse(i + 1, primes[j]) + shift[j];
            if (x >= 1.0) x -= 1.0;
            ps.points(i, j) = x;
        }
    });
    return ps;
}

PointSet lhs_points(std::uint64_t seed, std::size_t n, std::size_t d) {
    if (n < 1 || d < 1) throw std::invalid_argument("lhs_points: n and d must be >= 1");
    PointSet ps{Matrix(n, d), Sampler::LHS, seed, n, d};
    for (std::size_t j = 0; j < d; ++j) {
        Rng rng(derive_seed(seed, j, 0x4c4853));
        std::vector<std::uint32_t> perm(n);
        for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<std::uint32_t>(i);
        for (std::size_t i = n; i > 1; --i)
            std::swap(perm[i - 1], perm[rng.next_below(i)]);
        for (std::size_t i = 0; i < n; ++i)
            ps.points(i, j) = (perm[i] + rng.next_double()) / static_cast<double>(n);
    }
    return ps;
}

PointSet generate_points(Sampler sampler, std::uint64_t seed, std::size_t n, std::size_t d) {
    switch (sampler) {
        case Sampler::MC: return mc_points(seed, n, d);
        case Sampler::Sobol: return sobol_points(n, d);
        case Sampler::SobolScrambled: return sobol_points(n, d, seed);
        case Sampler::Halton: return halton_points(n, d);
        case Sampler::HaltonShifted: return halton_points(n, d, seed);
        case Sampler::LHS: return lhs_points(seed, n, d);
    }
    throw std::invalid_argument("generate_points: unknown sampler");
}

}  // namespace rqmc

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "icbsif/image.hpp"

namespace icbsif {

// 256-bit master key, presented externally as 64 hex characters.
struct MasterKey {
    std::array<std::uint8_t, 32> bytes{};

    static MasterKey from_hex(std::string_view hex) {
        if (hex.size() != 64)
            throw std::invalid_argument("master key must be 64 hex characters, got " +
                                        std::to_string(hex.size()));
        auto nibble = [](char c) -> int {
            if (c >= '0' && c <= '9') return c - '0';
            if (c >= 'a' && c <= 'f') return c - 'a' + 10;
            if (c >= 'A' && c <= 'F') return c - 'A' + 10;
            throw std::invalid_argument(std::string("master key contains non-hex character '") + c + "'");
        };
        MasterKey k;
        for (int i = 0; i < 32; ++i)
            k.bytes[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
        return k;
    }

    std::string to_hex() const {
        static const char* digits = "0123456789abcdef";
        std::string s;
        s.reserve(64);
        for (std::uint8_t b : bytes) {
            s.push_back(digits[b >> 4]);
            s.push_back(digits[b & 0xF]);
        }
        return s;
    }

    friend bool operator==(const MasterKey&, const MasterKey&) = default;
};

// One 32-bit round subkey.
using SubKey = std::uint32_t;

// Subkey i (1-based) is the big-endian 32-bit word at byte offset 4*((i-1) mod 8)
// of the master key; rounds beyond 8 reuse the words cyclically.
inline std::vector<SubKey> derive_subkeys(const MasterKey& key, int rounds) {
    if (rounds < 1) throw std::invalid_argument("derive_subkeys: round count must be >= 1");
    std::vector<SubKey> out;
    out.reserve(static_cast<std::size_t>(rounds));
    for (int i = 0; i < rounds; ++i) {
        const int o = 4 * (i % 8);
        out.push_back(static_cast<std::uint32_t>(key.bytes[o]) << 24 |
                      static_cast<std::uint32_t>(key.bytes[o + 1]) << 16 |
                      static_cast<std::uint32_t>(key.bytes[o + 2]) << 8 |
                      static_cast<std::uint32_t>(key.bytes[o + 3]));
    }
    return out;
}

// Domain tags keep the three per-round generators on unrelated streams.
inline constexpr std::uint32_t kTagScramble = 0;
inline constexpr std::uint32_t kTagNormalize = 1;
inline constexpr std::uint32_t kTagMask = 2;

namespace detail {
// One logistic-map step. The expression shape is fixed: together with
// -ffp-contract=off this pins the binary64 result on every platform.
inline double logistic_step(double x) { return 4.0 * x * (1.0 - x); }

// Maps a 32-bit word into (0, 1) exclusive, avoiding the absorbing point 0.
inline double logistic_seed(std::uint32_t v) {
    return (static_cast<double>(v) + 1.0) / 4294967298.0;  // 2^32 + 2
}
}  // namespace detail

// Deterministic keyed byte source: logistic map seeded from (subkey, tag),
// 100 warm-up iterates discarded, one byte = floor(x * 256) per further step.
class KeyedByteStream {
public:
    KeyedByteStream(SubKey subkey, std::uint32_t domain_tag)
        : x_(detail::logistic_seed(subkey ^ (domain_tag << 27))) {
        for (int i = 0; i < 100; ++i) x_ = detail::logistic_step(x_);
    }

    std::uint8_t next() {
        x_ = detail::logistic_step(x_);
        const int v = static_cast<int>(x_ * 256.0);
        return static_cast<std::uint8_t>(v > 255 ? 255 : v);
    }

private:
    double x_;
};

// L x L array whose every row and column is a permutation of {0..L-1}.
struct LatinSquare {
    int order = 0;
    std::vector<std::uint16_t> cells;  // row-major

    std::uint16_t at(int i, int j) const { return cells[static_cast<std::size_t>(i) * order + j]; }
};

inline bool is_latin_square(const LatinSquare& sq) {
    const int L = sq.order;
    if (L < 1 || sq.cells.size() != static_cast<std::size_t>(L) * L) return false;
    std::vector<bool> seen(static_cast<std::size_t>(L));
    for (int i = 0; i < L; ++i) {
        std::fill(seen.begin(), seen.end(), false);
        for (int j = 0; j < L; ++j) {
            const int v = sq.at(i, j);
            if (v >= L || seen[v]) return false;
            seen[v] = true;
        }
    }
    for (int j = 0; j < L; ++j) {
        std::fill(seen.begin(), seen.end(), false);
        for (int i = 0; i < L; ++i) {
            const int v = sq.at(i, j);
            if (v >= L || seen[v]) return false;
            seen[v] = true;
        }
    }
    return true;
}

// Latin square construction: O(i,j) = rho((i + j + s) mod L) with rho a
// stream-driven Fisher-Yates shuffle of {0..L-1} and s a stream-derived shift.
// Rows and columns are shifted copies of the permutation rho, so the Latin
// property holds for every stream.
inline LatinSquare gen_latin_square(SubKey subkey, int order, std::uint32_t tag = kTagScramble) {
    if (order < 1) throw std::invalid_argument("gen_latin_square: order must be >= 1");
    if (order > 65535) throw std::invalid_argument("gen_latin_square: order too large");
    KeyedByteStream stream(subkey, tag);
    std::vector<std::uint16_t> rho(static_cast<std::size_t>(order));
    std::iota(rho.begin(), rho.end(), 0);
    for (int i = order - 1; i > 0; --i) {
        const int j = stream.next() % (i + 1);
        std::swap(rho[i], rho[j]);
    }
    const int s = stream.next() % order;
    LatinSquare sq;
    sq.order = order;
    sq.cells.resize(static_cast<std::size_t>(order) * order);
    for (int i = 0; i < order; ++i)
        for (int j = 0; j < order; ++j)
            sq.cells[static_cast<std::size_t>(i) * order + j] = rho[(i + j + s) % order];
    return sq;
}

// Key-derived matrix added to the image during normalization.
inline Image gen_norm_matrix(SubKey subkey, int rows, int cols, std::uint32_t tag = kTagNormalize) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("gen_norm_matrix: dimensions must be >= 1");
    KeyedByteStream stream(subkey, tag);
    Image q(rows, cols);
    for (auto& p : q.px) p = stream.next();
    return q;
}

// 3x3 filtering mask; the anchor weight w(3,3) is always 1, which is what
// makes the filtering recurrence invertible regardless of the other weights.
struct Mask3x3 {
    std::array<std::uint8_t, 9> w{0, 0, 0, 0, 0, 0, 0, 0, 1};

    // 1-based accessor matching the (j1, j2) convention of the filter.
    std::uint8_t at(int j1, int j2) const { return w[static_cast<std::size_t>(j1 - 1) * 3 + (j2 - 1)]; }
    std::uint8_t& at(int j1, int j2) { return w[static_cast<std::size_t>(j1 - 1) * 3 + (j2 - 1)]; }
    std::uint8_t anchor() const { return w[8]; }

    friend bool operator==(const Mask3x3&, const Mask3x3&) = default;
};

// Eight stream bytes fill w(1,1)..w(3,2) row-major; w(3,3) stays 1.
inline Mask3x3 gen_mask(SubKey subkey, std::uint32_t tag = kTagMask) {
    KeyedByteStream stream(subkey, tag);
    Mask3x3 m;
    for (int k = 0; k < 8; ++k) m.w[k] = stream.next();
    m.w[8] = 1;
    return m;
}

// Rotation schedule for the hardened cipher: a permutation of {1,2,3,4}.
using RotationIndex = std::array<int, 4>;

inline bool is_rotation_index(const RotationIndex& idx) {
    RotationIndex s = idx;
    std::sort(s.begin(), s.end());
    return s == RotationIndex{1, 2, 3, 4};
}

// Derives the rotation index from (subkey, previous-image pixel sum, beta):
// seed the logistic map with subkey XOR (2^beta * sum mod 2^32), take iterates
// 101..104, and rank them ascending (stable, ties by original position).
inline RotationIndex logistic_rotation_index(SubKey subkey, std::uint64_t prev_sum, unsigned beta) {
    const std::uint32_t term =
        beta >= 32 ? 0u : static_cast<std::uint32_t>((prev_sum & 0xFFFFFFFFull) << beta);
    double x = detail::logistic_seed(subkey ^ term);
    std::array<double, 4> samples{};
    for (int n = 1; n <= 104; ++n) {
        x = detail::logistic_step(x);
        if (n >= 101) samples[static_cast<std::size_t>(n - 101)] = x;
    }
    std::array<int, 4> order{0, 1, 2, 3};
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return samples[a] < samples[b]; });
    RotationIndex alpha{};
    for (int rank = 0; rank < 4; ++rank) alpha[order[rank]] = rank + 1;
    return alpha;
}

}  // namespace icbsif

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "icbsif/cipher.hpp"
#include "icbsif/image.hpp"

namespace icbsif {

// Outcome of comparing the encryption of a differential image against the
// same differential taken over individual ciphertexts.
struct LinearityReport {
    bool holds = false;
    std::uint64_t mismatched_pixels = 0;
    double mismatch_fraction = 0.0;
    int rows = 0;
    int cols = 0;
};

namespace detail {
inline long long floor_mod(long long v, long long m) {
    long long r = v % m;
    if (r < 0) r += m;
    return r;
}
}  // namespace detail

// Checks E((a1 + a2 - a0) mod F) == (E(a1) + E(a2) - E(a0)) mod F for
// E(a) = (a + q) mod F. True for every input by the modular-arithmetic
// identity; the function exists so that claim can be tested exhaustively.
inline bool check_prop1(long long a0, long long a1, long long a2, long long q, int modulus) {
    if (modulus < 2) throw std::invalid_argument("check_prop1: modulus must be >= 2");
    auto E = [&](long long a) { return detail::floor_mod(a + q, modulus); };
    const long long lhs = E(detail::floor_mod(a1 + a2 - a0, modulus));
    const long long rhs = detail::floor_mod(E(a1) + E(a2) - E(a0), modulus);
    return lhs == rhs;
}

// The n-term generalization: E((sum a_i - (n-1) a0) mod F) equals
// (sum E(a_i) - (n-1) E(a0)) mod F.
inline bool check_prop2(const std::vector<long long>& a, long long a0, long long q, int modulus) {
    if (a.empty()) throw std::invalid_argument("check_prop2: need at least one term");
    if (modulus < 2) throw std::invalid_argument("check_prop2: modulus must be >= 2");
    auto E = [&](long long v) { return detail::floor_mod(v + q, modulus); };
    long long sum = 0, esum = 0;
    for (long long v : a) {
        sum += v;
        esum += E(v);
    }
    const long long n = static_cast<long long>(a.size());
    const long long lhs = E(detail::floor_mod(sum - (n - 1) * a0, modulus));
    const long long rhs = detail::floor_mod(esum - (n - 1) * E(a0), modulus);
    return lhs == rhs;
}

// (P1 + P2 - P0) mod F, the three-image combination whose encryption stays
// linear under the original cipher.
inline Image differential_image(const Image& p1, const Image& p2, const Image& p0) {
    return mod_lincomb({p1, p2, p0}, {1, 1, -1});
}

// Encrypts P0, P1, P2 and the differential image with the supplied cipher,
// then compares the ciphertext of the differential against the differential
// of the ciphertexts, pixel for pixel.
template <typename EncryptFn>
LinearityReport verify_linear_relation(const Image& p0, const Image& p1, const Image& p2,
                                       EncryptFn&& encrypt_fn) {
    detail::require_same_shape(p0, p1, "verify_linear_relation");
    detail::require_same_shape(p0, p2, "verify_linear_relation");
    const Image dp = differential_image(p1, p2, p0);
    const Image dc = encrypt_fn(dp);
    const Image c0 = encrypt_fn(p0);
    const Image c1 = encrypt_fn(p1);
    const Image c2 = encrypt_fn(p2);
    const Image dc_prime = mod_lincomb({c1, c2, c0}, {1, 1, -1});

    LinearityReport rep;
    rep.rows = dc.rows;
    rep.cols = dc.cols;
    for (std::size_t i = 0; i < dc.px.size(); ++i)
        if (dc.px[i] != dc_prime.px[i]) ++rep.mismatched_pixels;
    rep.mismatch_fraction =
        dc.px.empty() ? 0.0 : static_cast<double>(rep.mismatched_pixels) / static_cast<double>(dc.px.size());
    rep.holds = rep.mismatched_pixels == 0;
    return rep;
}

// Same comparison with the three intermediate images exposed, for tooling
// that wants to write them out.
struct LinearityEvidence {
    LinearityReport report;
    Image delta_p, delta_c, delta_c_prime;
};

template <typename EncryptFn>
LinearityEvidence verify_linear_relation_evidence(const Image& p0, const Image& p1, const Image& p2,
                                                  EncryptFn&& encrypt_fn) {
    detail::require_same_shape(p0, p1, "verify_linear_relation");
    detail::require_same_shape(p0, p2, "verify_linear_relation");
    LinearityEvidence ev;
    ev.delta_p = differential_image(p1, p2, p0);
    ev.delta_c = encrypt_fn(ev.delta_p);
    const Image c0 = encrypt_fn(p0);
    const Image c1 = encrypt_fn(p1);
    const Image c2 = encrypt_fn(p2);
    ev.delta_c_prime = mod_lincomb({c1, c2, c0}, {1, 1, -1});
    ev.report.rows = ev.delta_c.rows;
    ev.report.cols = ev.delta_c.cols;
    for (std::size_t i = 0; i < ev.delta_c.px.size(); ++i)
        if (ev.delta_c.px[i] != ev.delta_c_prime.px[i]) ++ev.report.mismatched_pixels;
    ev.report.mismatch_fraction = ev.delta_c.px.empty()
                                      ? 0.0
                                      : static_cast<double>(ev.report.mismatched_pixels) /
                                            static_cast<double>(ev.delta_c.px.size());
    ev.report.holds = ev.report.mismatched_pixels == 0;
    return ev;
}

// Per-stage differential checks: each cipher stage must commute with the
// pixel-wise modular combinations that drive the end-to-end linear relation.
struct StageDifferentialReport {
    bool scramble_ok = true;
    bool rotation_ok = true;
    bool normalization_ok = true;
    bool filtering_ok = true;
    bool all_ok() const { return scramble_ok && rotation_ok && normalization_ok && filtering_ok; }
};

// Each sample is a triple of equal-shaped images (p1, p2, p0). Scrambling and
// rotation are checked in both signs; normalization uses the three-image
// combination that cancels the unknown matrix; filtering uses the difference.
inline StageDifferentialReport verify_stage_differentials(
    const RoundContext& ctx, const std::vector<std::array<Image, 3>>& samples) {
    StageDifferentialReport rep;
    for (const auto& s : samples) {
        const Image& p1 = s[0];
        const Image& p2 = s[1];
        const Image& p0 = s[2];

        if (block_scramble(mod_add(p1, p2), ctx.scramble_box) !=
                mod_add(block_scramble(p1, ctx.scramble_box), block_scramble(p2, ctx.scramble_box)) ||
            block_scramble(mod_sub(p1, p2), ctx.scramble_box) !=
                mod_sub(block_scramble(p1, ctx.scramble_box), block_scramble(p2, ctx.scramble_box)))
            rep.scramble_ok = false;

        if (rotate90(mod_add(p1, p2), 1) != mod_add(rotate90(p1, 1), rotate90(p2, 1)) ||
            rotate90(mod_sub(p1, p2), 1) != mod_sub(rotate90(p1, 1), rotate90(p2, 1)))
            rep.rotation_ok = false;

        if (normalize(mod_lincomb({p1, p2, p0}, {1, 1, -1}), ctx.norm_matrix) !=
            mod_lincomb({normalize(p1, ctx.norm_matrix), normalize(p2, ctx.norm_matrix),
                         normalize(p0, ctx.norm_matrix)},
                        {1, 1, -1}))
            rep.normalization_ok = false;

        if (filter_image(mod_sub(p1, p2), ctx.mask) !=
            mod_sub(filter_image(p1, ctx.mask), filter_image(p2, ctx.mask)))
            rep.filtering_ok = false;
    }
    return rep;
}

// Desk-scale randomness statistics for a single image.
struct RandomnessStats {
    double ones_fraction = 0.0;       // monobit over all pixel bits
    double chi_square_256 = 0.0;      // byte histogram against uniform
    double zero_pixel_fraction = 0.0;
};

inline RandomnessStats randomness_stats(const Image& img) {
    RandomnessStats st;
    if (img.px.empty()) return st;
    std::uint64_t ones = 0, zeros = 0;
    std::array<std::uint64_t, 256> hist{};
    for (std::uint8_t v : img.px) {
        ones += static_cast<std::uint64_t>(std::popcount(v));
        if (v == 0) ++zeros;
        ++hist[v];
    }
    const double n = static_cast<double>(img.px.size());
    st.ones_fraction = static_cast<double>(ones) / (n * 8.0);
    st.zero_pixel_fraction = static_cast<double>(zeros) / n;
    const double expected = n / 256.0;
    double chi = 0.0;
    for (std::uint64_t h : hist) {
        const double d = static_cast<double>(h) - expected;
        chi += d * d / expected;
    }
    st.chi_square_256 = chi;
    return st;
}

}  // namespace icbsif

#pragma once

// Shared fixtures and independent reference implementations for the tests.
// The reference implementations deliberately avoid the library's code paths:
// they are the oracles the library is checked against.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "icbsif/codebook.hpp"
#include "icbsif/image.hpp"
#include "icbsif/keystream.hpp"

namespace testutil {

inline icbsif::Image random_image(std::mt19937& rng, int rows, int cols) {
    std::uniform_int_distribution<int> dist(0, 255);
    icbsif::Image img(rows, cols);
    for (auto& p : img.px) p = static_cast<std::uint8_t>(dist(rng));
    return img;
}

inline icbsif::MasterKey random_key(std::mt19937& rng) {
    std::uniform_int_distribution<int> dist(0, 255);
    icbsif::MasterKey k;
    for (auto& b : k.bytes) b = static_cast<std::uint8_t>(dist(rng));
    return k;
}

// Deterministic photo-like stand-ins for the classic lena/baboon test images:
// a smooth low-frequency portrait-style texture and a busy high-frequency one.
inline icbsif::Image lena_like(int n) {
    icbsif::Image img(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            const double x = static_cast<double>(c) / (n - 1);
            const double y = static_cast<double>(r) / (n - 1);
            double v = 0.52 + 0.24 * std::sin(6.1 * x + 1.7) * std::cos(4.3 * y + 0.4) +
                       0.16 * std::exp(-((x - 0.62) * (x - 0.62) + (y - 0.38) * (y - 0.38)) / 0.045) -
                       0.17 * y + 0.008 * (c % 7);
            int b = static_cast<int>(std::lround(v * 255.0));
            img.at(r, c) = static_cast<std::uint8_t>(b < 0 ? 0 : (b > 255 ? 255 : b));
        }
    return img;
}

inline icbsif::Image baboon_like(int n) {
    icbsif::Image img(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            const double x = static_cast<double>(c) / (n - 1);
            const double y = static_cast<double>(r) / (n - 1);
            double v = 0.5 + 0.27 * std::sin(37.0 * x + 11.0 * y) + 0.19 * std::cos(53.0 * y + 5.0 * x * x) +
                       0.11 * std::sin(101.0 * x * y + 2.0);
            int b = static_cast<int>(std::lround(v * 255.0));
            img.at(r, c) = static_cast<std::uint8_t>(b < 0 ? 0 : (b > 255 ? 255 : b));
        }
    return img;
}

// Literal evaluation of the filtering recurrence, 1-based coordinates, direct
// (j1, j2) double loop, explicit wrap-around pad lookups. Structured to match
// the definition rather than the library implementation.
inline icbsif::Image reference_filter(const icbsif::Image& n_img, const icbsif::Mask3x3& w) {
    const int M = n_img.rows, N = n_img.cols;
    std::vector<std::vector<long long>> c(static_cast<std::size_t>(M + 1),
                                          std::vector<long long>(static_cast<std::size_t>(N + 1), 0));
    auto n_at = [&](int x, int y) -> long long {
        const int xm = ((x - 1) % M + M) % M + 1;
        const int ym = ((y - 1) % N + N) % N + 1;
        return n_img.at(xm - 1, ym - 1);
    };
    for (int x = 1; x <= M; ++x)
        for (int y = 1; y <= N; ++y) {
            long long acc = w.at(3, 3) * n_at(x, y);
            for (int j1 = 1; j1 <= 3; ++j1)
                for (int j2 = 1; j2 <= 3; ++j2) {
                    if (j1 == 3 && j2 == 3) continue;
                    const int xx = x + j1 - 3;
                    const int yy = y + j2 - 3;
                    const long long v = (xx >= 1 && yy >= 1) ? c[xx][yy] : n_at(xx, yy);
                    acc += static_cast<long long>(w.at(j1, j2)) * v;
                }
            c[x][y] = acc % 256;
        }
    icbsif::Image out(M, N);
    for (int x = 1; x <= M; ++x)
        for (int y = 1; y <= N; ++y) out.at(x - 1, y - 1) = static_cast<std::uint8_t>(c[x][y]);
    return out;
}

// Independent per-pixel integer evaluation of a modular linear combination.
inline icbsif::Image scalar_lincomb(const std::vector<icbsif::Image>& imgs,
                                    const std::vector<long long>& coeffs) {
    icbsif::Image out(imgs.front().rows, imgs.front().cols);
    for (int r = 0; r < out.rows; ++r)
        for (int c = 0; c < out.cols; ++c) {
            long long s = 0;
            for (std::size_t k = 0; k < imgs.size(); ++k) s += coeffs[k] * imgs[k].at(r, c);
            while (s < 0) s += 256;
            out.at(r, c) = static_cast<std::uint8_t>(s % 256);
        }
    return out;
}

// Exact two-sided equal-tail binomial test: is observing k successes out of n
// consistent with success probability p at the given significance level?
inline bool binomial_two_sided_consistent(std::uint64_t k, std::uint64_t n, double p, double alpha) {
    auto log_pmf = [&](std::uint64_t i) {
        const double di = static_cast<double>(i), dn = static_cast<double>(n);
        return std::lgamma(dn + 1.0) - std::lgamma(di + 1.0) - std::lgamma(dn - di + 1.0) +
               di * std::log(p) + (dn - di) * std::log1p(-p);
    };
    double lower = 0.0;
    for (std::uint64_t i = 0; i <= k; ++i) lower += std::exp(log_pmf(i));
    double upper = 0.0;
    for (std::uint64_t i = k; i <= n; ++i) upper += std::exp(log_pmf(i));
    return std::min({lower, upper, 1.0}) >= alpha / 2.0;
}

// Oracle decorator that counts queries (thread-safe).
class CountingOracle : public icbsif::DecryptionOracle {
public:
    explicit CountingOracle(const icbsif::DecryptionOracle& inner) : inner_(inner) {}
    icbsif::Image decrypt(const icbsif::Image& cipher) const override {
        count_.fetch_add(1);
        return inner_.decrypt(cipher);
    }
    std::uint64_t count() const { return count_.load(); }

private:
    const icbsif::DecryptionOracle& inner_;
    mutable std::atomic<std::uint64_t> count_{0};
};

inline std::uint64_t mismatched_pixels(const icbsif::Image& a, const icbsif::Image& b) {
    std::uint64_t m = 0;
    for (std::size_t i = 0; i < a.px.size(); ++i)
        if (a.px[i] != b.px[i]) ++m;
    return m;
}

}  // namespace testutil

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace icbsif {

// Grayscale modulus. All pixel arithmetic is carried out mod 256 (8-bit pixels).
inline constexpr int kGrayLevels = 256;

// Row-major 8-bit grayscale image. Values are immutable by convention once an
// image has been produced by an operation; all operations return new images.
struct Image {
    int rows = 0;
    int cols = 0;
    std::vector<std::uint8_t> px;

    Image() = default;
    Image(int r, int c, std::uint8_t fill = 0)
        : rows(r), cols(c), px(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {
        if (r < 0 || c < 0) throw std::invalid_argument("Image: negative dimensions");
    }

    std::uint8_t& at(int r, int c) { return px[static_cast<std::size_t>(r) * cols + c]; }
    std::uint8_t at(int r, int c) const { return px[static_cast<std::size_t>(r) * cols + c]; }

    std::size_t pixel_count() const { return px.size(); }
    bool same_shape(const Image& o) const { return rows == o.rows && cols == o.cols; }
    bool square() const { return rows == cols; }

    friend bool operator==(const Image&, const Image&) = default;
};

namespace detail {
inline void require_same_shape(const Image& a, const Image& b, const char* op) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(op) + ": shape mismatch (" +
                                    std::to_string(a.rows) + "x" + std::to_string(a.cols) + " vs " +
                                    std::to_string(b.rows) + "x" + std::to_string(b.cols) + ")");
}

// Canonical residue in [0, kGrayLevels) for possibly negative accumulators.
inline std::uint8_t canonical_mod(long long v) {
    long long m = v % kGrayLevels;
    if (m < 0) m += kGrayLevels;
    return static_cast<std::uint8_t>(m);
}
}  // namespace detail

// Pixel-wise (a + b) mod 256.
inline Image mod_add(const Image& a, const Image& b) {
    detail::require_same_shape(a, b, "mod_add");
    Image out(a.rows, a.cols);
    for (std::size_t i = 0; i < a.px.size(); ++i)
        out.px[i] = static_cast<std::uint8_t>(a.px[i] + b.px[i]);
    return out;
}

// Pixel-wise (a - b) mod 256.
inline Image mod_sub(const Image& a, const Image& b) {
    detail::require_same_shape(a, b, "mod_sub");
    Image out(a.rows, a.cols);
    for (std::size_t i = 0; i < a.px.size(); ++i)
        out.px[i] = static_cast<std::uint8_t>(a.px[i] - b.px[i]);
    return out;
}

// Pixel-wise sum(coeffs[i] * images[i]) mod 256. Coefficients may be negative;
// accumulation happens in 64-bit signed integers with one final reduction, so
// the result is always the canonical residue.
inline Image mod_lincomb(const std::vector<Image>& images, const std::vector<long long>& coeffs) {
    if (images.empty()) throw std::invalid_argument("mod_lincomb: empty image list");
    if (images.size() != coeffs.size())
        throw std::invalid_argument("mod_lincomb: coefficient count does not match image count");
    for (const Image& img : images) detail::require_same_shape(images.front(), img, "mod_lincomb");

    std::vector<long long> acc(images.front().px.size(), 0);
    for (std::size_t k = 0; k < images.size(); ++k) {
        const long long c = coeffs[k];
        const auto& px = images[k].px;
        for (std::size_t i = 0; i < px.size(); ++i) acc[i] += c * px[i];
    }
    Image out(images.front().rows, images.front().cols);
    for (std::size_t i = 0; i < acc.size(); ++i) out.px[i] = detail::canonical_mod(acc[i]);
    return out;
}

// Rotate by quarter turns; positive is clockwise, negative counterclockwise,
// taken mod 4. Output dimensions swap when the turn count is odd.
inline Image rotate90(const Image& img, int quarter_turns) {
    int t = ((quarter_turns % 4) + 4) % 4;
    Image out = img;
    for (int k = 0; k < t; ++k) {
        Image next(out.cols, out.rows);
        for (int r = 0; r < out.rows; ++r)
            for (int c = 0; c < out.cols; ++c)
                next.at(c, out.rows - 1 - r) = out.at(r, c);
        out = std::move(next);
    }
    return out;
}

// Exact integer sum of all pixel values (no modular reduction).
inline std::uint64_t pixel_sum(const Image& img) {
    std::uint64_t s = 0;
    for (std::uint8_t v : img.px) s += v;
    return s;
}

}  // namespace icbsif

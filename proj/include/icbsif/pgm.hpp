#pragma once

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "icbsif/image.hpp"

namespace icbsif {

// Binary PGM ("P5") codec, maxval 255 only. The reader accepts '#' comments
// between header tokens; the writer never emits them, so write/read round
// trips are bit-exact at the pixel level.

namespace detail {
class PgmScanner {
public:
    explicit PgmScanner(std::span<const std::uint8_t> data) : data_(data) {}

    std::string next_token(const char* field) {
        skip_separators();
        if (pos_ >= data_.size())
            throw std::runtime_error(std::string("pgm parse error: missing ") + field);
        std::string tok;
        while (pos_ < data_.size() && !std::isspace(data_[pos_])) tok.push_back(static_cast<char>(data_[pos_++]));
        return tok;
    }

    int next_int(const char* field, int min_value, int max_value) {
        const std::string tok = next_token(field);
        long long v = 0;
        for (char ch : tok) {
            if (!std::isdigit(static_cast<unsigned char>(ch)))
                throw std::runtime_error(std::string("pgm parse error: ") + field + " is not a number: '" + tok + "'");
            v = v * 10 + (ch - '0');
            if (v > max_value)
                throw std::runtime_error(std::string("pgm parse error: ") + field + " out of range: '" + tok + "'");
        }
        if (v < min_value)
            throw std::runtime_error(std::string("pgm parse error: ") + field + " out of range: '" + tok + "'");
        return static_cast<int>(v);
    }

    // A single whitespace byte terminates the header; raw pixels follow.
    std::span<const std::uint8_t> payload() {
        if (pos_ >= data_.size() || !std::isspace(data_[pos_]))
            throw std::runtime_error("pgm parse error: missing whitespace before payload");
        ++pos_;
        return data_.subspan(pos_);
    }

private:
    void skip_separators() {
        while (pos_ < data_.size()) {
            if (std::isspace(data_[pos_])) {
                ++pos_;
            } else if (data_[pos_] == '#') {
                while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};
}  // namespace detail

inline Image read_pgm(std::span<const std::uint8_t> bytes) {
    detail::PgmScanner sc(bytes);
    const std::string magic = sc.next_token("magic");
    if (magic != "P5")
        throw std::runtime_error("pgm parse error: magic is '" + magic + "', expected 'P5'");
    const int width = sc.next_int("width", 1, 1 << 20);
    const int height = sc.next_int("height", 1, 1 << 20);
    const int maxval = sc.next_int("maxval", 1, 65535);
    if (maxval != 255)
        throw std::runtime_error("pgm parse error: maxval is " + std::to_string(maxval) + ", only 255 is supported");
    const auto payload = sc.payload();
    const std::size_t need = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (payload.size() < need)
        throw std::runtime_error("pgm parse error: payload truncated (" + std::to_string(payload.size()) +
                                 " of " + std::to_string(need) + " bytes)");
    Image img(height, width);
    std::copy(payload.begin(), payload.begin() + static_cast<std::ptrdiff_t>(need), img.px.begin());
    return img;
}

inline Image read_pgm(const std::vector<std::uint8_t>& bytes) {
    return read_pgm(std::span<const std::uint8_t>(bytes));
}

inline std::vector<std::uint8_t> write_pgm(const Image& img) {
    if (img.rows < 1 || img.cols < 1) throw std::invalid_argument("write_pgm: empty image");
    std::string header = "P5\n" + std::to_string(img.cols) + " " + std::to_string(img.rows) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.px.begin(), img.px.end());
    return out;
}

inline Image load_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return read_pgm(bytes);
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

inline void save_pgm(const std::filesystem::path& path, const Image& img) {
    const auto bytes = write_pgm(img);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace icbsif

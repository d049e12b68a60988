#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "icbsif/image.hpp"
#include "icbsif/pgm.hpp"

namespace icbsif {

// Black-box decryption capability: hand in a ciphertext, get the plaintext.
// Implementations must be deterministic and safe to call from several threads
// at once; the attack holds no key material of its own.
class DecryptionOracle {
public:
    virtual ~DecryptionOracle() = default;
    virtual Image decrypt(const Image& cipher) const = 0;
};

// Adapts any image -> image callable (an in-process decryptor, a subprocess
// wrapper, ...) to the oracle interface.
class FunctionOracle : public DecryptionOracle {
public:
    explicit FunctionOracle(std::function<Image(const Image&)> fn) : fn_(std::move(fn)) {}
    Image decrypt(const Image& cipher) const override { return fn_(cipher); }

private:
    std::function<Image(const Image&)> fn_;
};

// The attack's entire state: the plaintext of the all-zero ciphertext plus
// one plaintext per unit-impulse ciphertext. Impulse n = (i-1)*M + j covers
// position (i, j), 1-based, so there are exactly M*N + 1 entries.
struct Codebook {
    int rows = 0;
    int cols = 0;
    Image zero_plaintext;
    std::vector<Image> impulse_plaintexts;  // slot n stored at index n-1

    std::size_t entry_count() const { return impulse_plaintexts.size() + 1; }
};

inline std::size_t codebook_query_count(int rows, int cols) {
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) + 1;
}

// Queries the oracle once per basis ciphertext: the all-zero image first
// (task 0), then every unit impulse. Queries are independent, so with
// jobs > 1 they fan out across threads; entries land in indexed slots, so the
// result does not depend on completion order. An oracle failure aborts the
// build with the number of completed queries in the message.
inline Codebook build_codebook(const DecryptionOracle& oracle, int rows, int cols, int jobs = 1) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("build_codebook: dimensions must be >= 1");
    if (rows != cols)
        throw std::invalid_argument("build_codebook: the cipher only accepts square images (" +
                                    std::to_string(rows) + "x" + std::to_string(cols) + ")");
    const std::size_t total = codebook_query_count(rows, cols);
    Codebook cb;
    cb.rows = rows;
    cb.cols = cols;
    cb.impulse_plaintexts.resize(total - 1);

    auto run_task = [&](std::size_t task) {
        Image c(rows, cols, 0);
        if (task > 0) {
            const std::size_t n = task - 1;  // 0-based impulse position
            c.px[(n / static_cast<std::size_t>(cols)) * cols + n % static_cast<std::size_t>(cols)] = 1;
        }
        Image p = oracle.decrypt(c);
        if (p.rows != rows || p.cols != cols)
            throw std::runtime_error("oracle returned a " + std::to_string(p.rows) + "x" +
                                     std::to_string(p.cols) + " image, expected " +
                                     std::to_string(rows) + "x" + std::to_string(cols));
        if (task == 0)
            cb.zero_plaintext = std::move(p);
        else
            cb.impulse_plaintexts[task - 1] = std::move(p);
    };

    if (jobs <= 1) {
        for (std::size_t task = 0; task < total; ++task) {
            try {
                run_task(task);
            } catch (const std::exception& e) {
                throw std::runtime_error("codebook build aborted after " + std::to_string(task) +
                                         " of " + std::to_string(total) + " queries: " + e.what());
            }
        }
        return cb;
    }

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> completed{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    auto worker = [&] {
        for (;;) {
            const std::size_t task = next.fetch_add(1);
            if (task >= total) return;
            {
                std::scoped_lock lock(err_mutex);
                if (first_error) return;
            }
            try {
                run_task(task);
                completed.fetch_add(1);
            } catch (...) {
                std::scoped_lock lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int nthreads = std::min<std::size_t>(static_cast<std::size_t>(jobs), total);
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) {
        try {
            std::rethrow_exception(first_error);
        } catch (const std::exception& e) {
            throw std::runtime_error("codebook build aborted after " + std::to_string(completed.load()) +
                                     " of " + std::to_string(total) + " queries: " + e.what());
        }
    }
    return cb;
}

// Reconstructs the plaintext of an arbitrary ciphertext: with k_n the pixel
// value of C at impulse position n, the plaintext is
// sum(k_n * P_n) - (sum(k_n) - 1) * P_0 mod 256, skipping zero coefficients.
// Accumulation uses 64-bit integers with one final reduction per pixel.
inline Image recover(const Image& cipher, const Codebook& cb) {
    if (cipher.rows != cb.rows || cipher.cols != cb.cols)
        throw std::invalid_argument("recover: ciphertext is " + std::to_string(cipher.rows) + "x" +
                                    std::to_string(cipher.cols) + " but codebook is " +
                                    std::to_string(cb.rows) + "x" + std::to_string(cb.cols));
    const std::size_t npx = cipher.px.size();
    std::vector<long long> acc(npx, 0);
    long long coeff_sum = 0;
    for (std::size_t n = 0; n < npx; ++n) {
        const int k = cipher.px[n];
        if (k == 0) continue;
        coeff_sum += k;
        const auto& pn = cb.impulse_plaintexts[n].px;
        for (std::size_t t = 0; t < npx; ++t) acc[t] += static_cast<long long>(k) * pn[t];
    }
    Image out(cb.rows, cb.cols);
    const auto& p0 = cb.zero_plaintext.px;
    for (std::size_t t = 0; t < npx; ++t)
        out.px[t] = detail::canonical_mod(acc[t] - (coeff_sum - 1) * p0[t]);
    return out;
}

// On-disk layout: <dir>/manifest.json plus one PGM per entry. The zero-
// ciphertext plaintext is p000000.pgm; impulse n is p<n zero-padded to 6>.pgm
// in the same index order as the in-memory codebook.
inline constexpr const char* kCodebookManifestName = "manifest.json";
inline constexpr int kCodebookFormatVersion = 1;

inline std::string codebook_entry_filename(std::size_t n) {
    std::string num = std::to_string(n);
    return "p" + std::string(6 - std::min<std::size_t>(6, num.size()), '0') + num + ".pgm";
}

inline void save_codebook(const Codebook& cb, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest = {
        {"format", "icbsif-codebook"},
        {"version", kCodebookFormatVersion},
        {"height", cb.rows},
        {"width", cb.cols},
        {"entries", cb.entry_count()},
        {"zero_entry", codebook_entry_filename(0)},
        {"impulse_entry_pattern", "p<n, zero-padded to 6 digits>.pgm for n = 1..height*width"},
        {"index_order", "n = (i-1)*height + j for impulse at row i, column j (1-based)"},
    };
    save_pgm(dir / codebook_entry_filename(0), cb.zero_plaintext);
    for (std::size_t n = 1; n <= cb.impulse_plaintexts.size(); ++n)
        save_pgm(dir / codebook_entry_filename(n), cb.impulse_plaintexts[n - 1]);
    std::ofstream out(dir / kCodebookManifestName, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (dir / kCodebookManifestName).string());
    out << manifest.dump(2) << "\n";
}

inline bool codebook_exists(const std::filesystem::path& dir) {
    return std::filesystem::exists(dir / kCodebookManifestName);
}

inline Codebook load_codebook(const std::filesystem::path& dir) {
    std::ifstream in(dir / kCodebookManifestName);
    if (!in) throw std::runtime_error("cannot open " + (dir / kCodebookManifestName).string());
    nlohmann::json manifest = nlohmann::json::parse(in);
    if (manifest.value("format", "") != "icbsif-codebook")
        throw std::runtime_error("not a codebook manifest: " + (dir / kCodebookManifestName).string());
    if (manifest.value("version", 0) != kCodebookFormatVersion)
        throw std::runtime_error("unsupported codebook version in " + dir.string());
    Codebook cb;
    cb.rows = manifest.at("height").get<int>();
    cb.cols = manifest.at("width").get<int>();
    if (cb.rows < 1 || cb.cols < 1) throw std::runtime_error("codebook manifest has invalid dimensions");
    const std::size_t total = codebook_query_count(cb.rows, cb.cols);
    if (manifest.at("entries").get<std::size_t>() != total)
        throw std::runtime_error("codebook manifest entry count does not match dimensions");
    cb.zero_plaintext = load_pgm(dir / codebook_entry_filename(0));
    cb.impulse_plaintexts.reserve(total - 1);
    for (std::size_t n = 1; n < total; ++n)
        cb.impulse_plaintexts.push_back(load_pgm(dir / codebook_entry_filename(n)));
    for (const Image& img : cb.impulse_plaintexts)
        if (img.rows != cb.rows || img.cols != cb.cols)
            throw std::runtime_error("codebook entry has wrong dimensions in " + dir.string());
    if (cb.zero_plaintext.rows != cb.rows || cb.zero_plaintext.cols != cb.cols)
        throw std::runtime_error("codebook zero entry has wrong dimensions in " + dir.string());
    return cb;
}

}  // namespace icbsif

// Command-line workbench for the IC-BSIF image cipher: encryption and
// decryption, the differential linearity check, the codebook attack against a
// decryption oracle, and randomness statistics. Images are binary PGM (P5)
// throughout. Exit codes: 0 success / relation holds, 1 analytic negative
// (relation violated, recovery mismatch), 2 usage or I/O error.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "icbsif/cipher.hpp"
#include "icbsif/codebook.hpp"
#include "icbsif/diffanalysis.hpp"
#include "icbsif/image.hpp"
#include "icbsif/improved.hpp"
#include "icbsif/keystream.hpp"
#include "icbsif/pgm.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNegative = 1;
constexpr int kExitUsage = 2;
constexpr int kReportSchemaVersion = 1;
constexpr const char* kKeyEnvVar = "ICBSIF_KEY";

struct CipherOptions {
    std::string key_hex;
    std::string cipher = "icbsif";  // icbsif | improved
    int rounds = 4;
    unsigned beta = 0;
    bool allow_weak_rounds = false;
};

void add_key_option(CLI::App* cmd, CipherOptions& opts) {
    cmd->add_option("--key,-k", opts.key_hex, "master key, 64 hex chars")
        ->envname(kKeyEnvVar);
}

void add_cipher_options(CLI::App* cmd, CipherOptions& opts) {
    add_key_option(cmd, opts);
    cmd->add_option("--cipher", opts.cipher, "cipher variant")
        ->check(CLI::IsMember({"icbsif", "improved"}))
        ->capture_default_str();
    cmd->add_option("--rounds,-m", opts.rounds, "rounds for the improved cipher")
        ->capture_default_str();
    cmd->add_option("--beta", opts.beta, "rotation-index scaling exponent (improved cipher)")
        ->capture_default_str();
    cmd->add_flag("--allow-weak-rounds", opts.allow_weak_rounds,
                  "permit fewer than 3 rounds of the improved cipher");
}

icbsif::MasterKey parse_key(const CipherOptions& opts) {
    if (opts.key_hex.empty())
        throw CLI::ValidationError("--key", "missing master key (flag --key or env " +
                                                std::string(kKeyEnvVar) + ")");
    return icbsif::MasterKey::from_hex(opts.key_hex);
}

std::function<icbsif::Image(const icbsif::Image&)> make_encryptor(const CipherOptions& opts,
                                                                  const icbsif::MasterKey& key) {
    if (opts.cipher == "improved") {
        icbsif::ImprovedParams params{opts.rounds, opts.beta, opts.allow_weak_rounds};
        return [key, params](const icbsif::Image& img) {
            return icbsif::encrypt_improved(img, key, params);
        };
    }
    return [key](const icbsif::Image& img) { return icbsif::encrypt(img, key); };
}

std::function<icbsif::Image(const icbsif::Image&)> make_decryptor(const CipherOptions& opts,
                                                                  const icbsif::MasterKey& key) {
    if (opts.cipher == "improved") {
        icbsif::ImprovedParams params{opts.rounds, opts.beta, opts.allow_weak_rounds};
        return [key, params](const icbsif::Image& img) {
            return icbsif::decrypt_improved(img, key, params);
        };
    }
    return [key](const icbsif::Image& img) { return icbsif::decrypt(img, key); };
}

void emit_report(const json& rep, const std::string& format) {
    if (format == "json") {
        std::cout << rep.dump(2) << "\n";
        return;
    }
    for (const auto& [k, v] : rep.items()) {
        if (v.is_string())
            std::cout << k << "=" << v.get<std::string>() << "\n";
        else
            std::cout << k << "=" << v.dump() << "\n";
    }
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ------------------------------------------------------------------ encrypt / decrypt

int run_crypt(const CipherOptions& opts, const std::string& input, const std::string& output,
              bool encrypting) {
    const icbsif::MasterKey key = parse_key(opts);
    const icbsif::Image in = icbsif::load_pgm(input);
    const auto start = std::chrono::steady_clock::now();
    const icbsif::Image out =
        encrypting ? make_encryptor(opts, key)(in) : make_decryptor(opts, key)(in);
    const double elapsed = seconds_since(start);
    icbsif::save_pgm(output, out);
    std::cout << (encrypting ? "encrypted " : "decrypted ") << in.rows << "x" << in.cols << " in "
              << elapsed << " s -> " << output << "\n";
    return kExitOk;
}

// ------------------------------------------------------------------ verify-linear

int run_verify_linear(const CipherOptions& opts, const std::string& p1_path,
                      const std::string& p2_path, const std::string& p0_path,
                      const std::string& out_dir, const std::string& format) {
    const icbsif::MasterKey key = parse_key(opts);
    const icbsif::Image p1 = icbsif::load_pgm(p1_path);
    const icbsif::Image p2 = icbsif::load_pgm(p2_path);
    // A blank image stands in when no third input is given.
    const icbsif::Image p0 =
        p0_path.empty() ? icbsif::Image(p1.rows, p1.cols, 0) : icbsif::load_pgm(p0_path);

    const auto ev = icbsif::verify_linear_relation_evidence(p0, p1, p2, make_encryptor(opts, key));

    fs::create_directories(out_dir);
    icbsif::save_pgm(fs::path(out_dir) / "delta_p.pgm", ev.delta_p);
    icbsif::save_pgm(fs::path(out_dir) / "delta_c.pgm", ev.delta_c);
    icbsif::save_pgm(fs::path(out_dir) / "delta_c_prime.pgm", ev.delta_c_prime);

    json rep = {
        {"schema_version", kReportSchemaVersion},
        {"command", "verify-linear"},
        {"cipher", opts.cipher},
        {"height", ev.report.rows},
        {"width", ev.report.cols},
        {"holds", ev.report.holds},
        {"mismatched_pixels", ev.report.mismatched_pixels},
        {"mismatch_fraction", ev.report.mismatch_fraction},
    };
    if (opts.cipher == "improved") rep["rounds"] = opts.rounds;
    emit_report(rep, format);
    return ev.report.holds ? kExitOk : kExitNegative;
}

// ------------------------------------------------------------------ attack

// External decryption machine: the configured command is run once per query
// with two extra arguments, the ciphertext PGM path and the path where it must
// write the plaintext PGM. A nonzero exit status aborts the attack.
class CommandOracle : public icbsif::DecryptionOracle {
public:
    explicit CommandOracle(std::string cmd) : cmd_(std::move(cmd)) {
        dir_ = fs::temp_directory_path() /
               ("icbsif-oracle-" + std::to_string(std::random_device{}()));
        fs::create_directories(dir_);
    }
    ~CommandOracle() override {
        std::error_code ec;
        fs::remove_all(dir_, ec);
    }

    icbsif::Image decrypt(const icbsif::Image& cipher) const override {
        const unsigned long id = serial_.fetch_add(1);
        const fs::path in = dir_ / ("c" + std::to_string(id) + ".pgm");
        const fs::path out = dir_ / ("p" + std::to_string(id) + ".pgm");
        icbsif::save_pgm(in, cipher);
        // The child's stdout is discarded so reports on our stdout stay
        // machine-readable; its stderr passes through for diagnostics.
        const std::string full = cmd_ + " " + in.string() + " " + out.string() + " > /dev/null";
        const int status = std::system(full.c_str());
        if (status != 0)
            throw std::runtime_error("oracle command failed with status " + std::to_string(status) +
                                     ": " + full);
        icbsif::Image plain = icbsif::load_pgm(out);
        std::error_code ec;
        fs::remove(in, ec);
        fs::remove(out, ec);
        return plain;
    }

private:
    std::string cmd_;
    fs::path dir_;
    mutable std::atomic<unsigned long> serial_{0};
};

struct AttackOptions {
    CipherOptions cipher;
    std::string target;
    std::string output;
    std::string oracle_cmd;
    std::string codebook_dir;
    int jobs = 0;  // 0 -> hardware concurrency
    bool verify = false;
    std::string format = "text";
};

int run_attack(const AttackOptions& opts) {
    const icbsif::Image target = icbsif::load_pgm(opts.target);

    std::unique_ptr<icbsif::DecryptionOracle> oracle;
    if (!opts.oracle_cmd.empty()) {
        oracle = std::make_unique<CommandOracle>(opts.oracle_cmd);
    } else {
        const icbsif::MasterKey key = parse_key(opts.cipher);
        oracle = std::make_unique<icbsif::FunctionOracle>(make_decryptor(opts.cipher, key));
    }

    int jobs = opts.jobs;
    if (jobs <= 0) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

    const auto start = std::chrono::steady_clock::now();
    std::size_t queries_issued = 0;
    icbsif::Codebook cb;
    bool loaded = false;
    if (!opts.codebook_dir.empty() && icbsif::codebook_exists(opts.codebook_dir)) {
        cb = icbsif::load_codebook(opts.codebook_dir);
        if (cb.rows != target.rows || cb.cols != target.cols)
            throw std::runtime_error("persisted codebook is " + std::to_string(cb.rows) + "x" +
                                     std::to_string(cb.cols) + " but target is " +
                                     std::to_string(target.rows) + "x" + std::to_string(target.cols));
        loaded = true;
    } else {
        cb = icbsif::build_codebook(*oracle, target.rows, target.cols, jobs);
        queries_issued = icbsif::codebook_query_count(target.rows, target.cols);
        if (!opts.codebook_dir.empty()) icbsif::save_codebook(cb, opts.codebook_dir);
    }

    const icbsif::Image recovered = icbsif::recover(target, cb);
    icbsif::save_pgm(opts.output, recovered);

    json rep = {
        {"schema_version", kReportSchemaVersion},
        {"command", "attack"},
        {"height", target.rows},
        {"width", target.cols},
        {"codebook_loaded", loaded},
        {"queries_issued", queries_issued},
        {"elapsed_seconds", seconds_since(start)},
        {"output", opts.output},
    };

    int exit_code = kExitOk;
    if (opts.verify) {
        // One direct oracle query yields the ground truth to compare against.
        const icbsif::Image truth = oracle->decrypt(target);
        std::uint64_t mismatched = 0;
        for (std::size_t i = 0; i < truth.px.size(); ++i)
            if (truth.px[i] != recovered.px[i]) ++mismatched;
        rep["verify_queries"] = 1;
        rep["verified"] = mismatched == 0;
        rep["verify_mismatched_pixels"] = mismatched;
        rep["verify_mismatch_fraction"] =
            static_cast<double>(mismatched) / static_cast<double>(truth.px.size());
        if (mismatched != 0) exit_code = kExitNegative;
    }
    emit_report(rep, opts.format);
    return exit_code;
}

// ------------------------------------------------------------------ stats

int run_stats(const std::string& input, const std::string& format) {
    const icbsif::Image img = icbsif::load_pgm(input);
    const icbsif::RandomnessStats st = icbsif::randomness_stats(img);
    json rep = {
        {"schema_version", kReportSchemaVersion},
        {"command", "stats"},
        {"height", img.rows},
        {"width", img.cols},
        {"ones_fraction", st.ones_fraction},
        {"chi_square_256", st.chi_square_256},
        {"zero_pixel_fraction", st.zero_pixel_fraction},
    };
    emit_report(rep, format);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"IC-BSIF cipher workbench: encryption, differential linearity "
                 "verification, codebook attack, randomness statistics"};
    app.require_subcommand(1);

    CipherOptions crypt_opts;
    std::string crypt_in, crypt_out;
    CLI::App* enc = app.add_subcommand("encrypt", "encrypt a PGM image");
    enc->add_option("input", crypt_in, "plaintext PGM")->required();
    enc->add_option("output", crypt_out, "ciphertext PGM")->required();
    add_cipher_options(enc, crypt_opts);
    CLI::App* dec = app.add_subcommand("decrypt", "decrypt a PGM image");
    dec->add_option("input", crypt_in, "ciphertext PGM")->required();
    dec->add_option("output", crypt_out, "plaintext PGM")->required();
    add_cipher_options(dec, crypt_opts);

    CipherOptions vl_opts;
    std::string vl_p1, vl_p2, vl_p0, vl_outdir = ".", vl_format = "text";
    CLI::App* vl = app.add_subcommand(
        "verify-linear", "check the differential linear relation on three plaintexts");
    vl->add_option("p1", vl_p1, "first plaintext PGM")->required();
    vl->add_option("p2", vl_p2, "second plaintext PGM")->required();
    vl->add_option("p0", vl_p0, "reference plaintext PGM (default: blank image)");
    add_cipher_options(vl, vl_opts);
    vl->add_option("--out-dir", vl_outdir, "directory for the differential images")
        ->capture_default_str();
    vl->add_option("--format", vl_format, "report format")
        ->check(CLI::IsMember({"text", "json"}))
        ->capture_default_str();

    AttackOptions at_opts;
    CLI::App* at = app.add_subcommand("attack", "recover a plaintext via the codebook attack");
    at->add_option("target", at_opts.target, "target ciphertext PGM")->required();
    at->add_option("output", at_opts.output, "recovered plaintext PGM")->required();
    add_cipher_options(at, at_opts.cipher);
    at->add_option("--oracle-cmd", at_opts.oracle_cmd,
                   "external decryption command, invoked as CMD <cipher.pgm> <plain.pgm>");
    at->add_option("--codebook-dir", at_opts.codebook_dir,
                   "persist the codebook here and resume from it when present");
    at->add_option("--jobs,-j", at_opts.jobs, "parallel oracle queries (default: all cores)");
    at->add_flag("--verify", at_opts.verify,
                 "spend one extra oracle query to check the recovered plaintext");
    at->add_option("--format", at_opts.format, "report format")
        ->check(CLI::IsMember({"text", "json"}))
        ->capture_default_str();

    std::string st_in, st_format = "text";
    CLI::App* st = app.add_subcommand("stats", "randomness statistics of a PGM image");
    st->add_option("input", st_in, "image PGM")->required();
    st->add_option("--format", st_format, "report format")
        ->check(CLI::IsMember({"text", "json"}))
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (enc->parsed()) return run_crypt(crypt_opts, crypt_in, crypt_out, true);
        if (dec->parsed()) return run_crypt(crypt_opts, crypt_in, crypt_out, false);
        if (vl->parsed()) return run_verify_linear(vl_opts, vl_p1, vl_p2, vl_p0, vl_outdir, vl_format);
        if (at->parsed()) return run_attack(at_opts);
        if (st->parsed()) return run_stats(st_in, st_format);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}

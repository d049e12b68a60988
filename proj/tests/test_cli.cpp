#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <json.hpp>

#include "icbsif/cipher.hpp"
#include "icbsif/improved.hpp"
#include "icbsif/pgm.hpp"
#include "testutil.hpp"

namespace fs = std::filesystem;
using icbsif::Image;

namespace {

std::string cli_bin() {
    const char* bin = std::getenv("ICBSIF_CLI_BIN");
    REQUIRE(bin != nullptr);
    return bin;
}

struct Sandbox {
    fs::path dir;
    Sandbox() {
        dir = fs::temp_directory_path() / ("icbsif_cli_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(dir);
    }
    ~Sandbox() { fs::remove_all(dir); }
    fs::path operator/(const std::string& name) const { return dir / name; }
};

int run(const std::string& args, const fs::path& stdout_file = {}, const fs::path& stderr_file = {}) {
    std::string cmd = cli_bin() + " " + args;
    if (!stdout_file.empty()) cmd += " > " + stdout_file.string();
    if (!stderr_file.empty()) cmd += " 2> " + stderr_file.string();
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

const std::string kKey = "000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f";

}  // namespace

TEST_CASE("cli encrypt/decrypt round trip") {
    Sandbox sb;
    std::mt19937 rng(701);
    const Image p = testutil::random_image(rng, 16, 16);
    icbsif::save_pgm(sb / "p.pgm", p);

    CHECK(run("encrypt " + (sb / "p.pgm").string() + " " + (sb / "c.pgm").string() + " --key " + kKey,
              sb / "out.txt") == 0);
    CHECK(run("decrypt " + (sb / "c.pgm").string() + " " + (sb / "d.pgm").string() + " --key " + kKey,
              sb / "out.txt") == 0);
    CHECK(icbsif::load_pgm(sb / "d.pgm") == p);

    // the ciphertext matches the library cipher bit for bit
    CHECK(icbsif::load_pgm(sb / "c.pgm") == icbsif::encrypt(p, icbsif::MasterKey::from_hex(kKey)));
}

TEST_CASE("cli key validation and the key environment variable") {
    Sandbox sb;
    std::mt19937 rng(702);
    icbsif::save_pgm(sb / "p.pgm", testutil::random_image(rng, 16, 16));

    CHECK(run("encrypt " + (sb / "p.pgm").string() + " " + (sb / "c.pgm").string() + " --key 1234",
              sb / "out.txt", sb / "err.txt") == 2);
    CHECK(slurp(sb / "err.txt").find("64 hex") != std::string::npos);

    CHECK(run("encrypt " + (sb / "p.pgm").string() + " " + (sb / "c.pgm").string(),
              sb / "out.txt", sb / "err.txt") == 2);

    // key via environment variable instead of the flag
    const std::string env_cmd = "ICBSIF_KEY=" + kKey + " " + cli_bin() + " encrypt " +
                                (sb / "p.pgm").string() + " " + (sb / "c2.pgm").string() + " > /dev/null";
    CHECK(WEXITSTATUS(std::system(env_cmd.c_str())) == 0);
}

TEST_CASE("cli rejects non-square input with a clear message") {
    Sandbox sb;
    std::mt19937 rng(703);
    icbsif::save_pgm(sb / "p.pgm", testutil::random_image(rng, 16, 20));
    CHECK(run("encrypt " + (sb / "p.pgm").string() + " " + (sb / "c.pgm").string() + " --key " + kKey,
              sb / "out.txt", sb / "err.txt") == 2);
    CHECK(slurp(sb / "err.txt").find("square") != std::string::npos);
}

TEST_CASE("cli verify-linear") {
    Sandbox sb;
    std::mt19937 rng(704);
    icbsif::save_pgm(sb / "p1.pgm", testutil::random_image(rng, 16, 16));
    icbsif::save_pgm(sb / "p2.pgm", testutil::random_image(rng, 16, 16));
    icbsif::save_pgm(sb / "p0.pgm", testutil::random_image(rng, 16, 16));

    const std::string common = (sb / "p1.pgm").string() + " " + (sb / "p2.pgm").string() + " " +
                               (sb / "p0.pgm").string() + " --key " + kKey + " --out-dir " +
                               (sb / "ev").string() + " --format json";

    CHECK(run("verify-linear " + common, sb / "rep.json") == 0);
    auto rep = nlohmann::json::parse(slurp(sb / "rep.json"));
    CHECK(rep["holds"] == true);
    CHECK(rep["mismatched_pixels"] == 0);
    CHECK(fs::exists(sb / "ev" / "delta_p.pgm"));
    CHECK(fs::exists(sb / "ev" / "delta_c.pgm"));
    CHECK(fs::exists(sb / "ev" / "delta_c_prime.pgm"));

    // improved cipher: relation violated, exit 1, mismatch fraction near 1
    CHECK(run("verify-linear " + common + " --cipher improved --rounds 3", sb / "rep2.json") == 1);
    auto rep2 = nlohmann::json::parse(slurp(sb / "rep2.json"));
    CHECK(rep2["holds"] == false);
    CHECK(rep2["mismatch_fraction"].get<double>() > 0.9);
}

TEST_CASE("cli verify-linear synthesizes the blank third image") {
    Sandbox sb;
    std::mt19937 rng(705);
    const Image p1 = testutil::random_image(rng, 16, 16);
    const Image p2 = testutil::random_image(rng, 16, 16);
    icbsif::save_pgm(sb / "p1.pgm", p1);
    icbsif::save_pgm(sb / "p2.pgm", p2);

    CHECK(run("verify-linear " + (sb / "p1.pgm").string() + " " + (sb / "p2.pgm").string() +
                  " --key " + kKey + " --out-dir " + (sb / "ev").string(),
              sb / "rep.txt") == 0);
    CHECK(slurp(sb / "rep.txt").find("holds=true") != std::string::npos);

    // with a blank reference the differential image is just p1 + p2
    CHECK(icbsif::load_pgm(sb / "ev" / "delta_p.pgm") == icbsif::mod_add(p1, p2));
}

TEST_CASE("cli identical triple holds trivially") {
    Sandbox sb;
    std::mt19937 rng(706);
    const Image p = testutil::random_image(rng, 16, 16);
    icbsif::save_pgm(sb / "p.pgm", p);
    CHECK(run("verify-linear " + (sb / "p.pgm").string() + " " + (sb / "p.pgm").string() + " " +
                  (sb / "p.pgm").string() + " --key " + kKey + " --out-dir " + (sb / "ev").string(),
              sb / "rep.txt") == 0);
}

TEST_CASE("cli stats") {
    Sandbox sb;
    icbsif::save_pgm(sb / "zero.pgm", Image(16, 16, 0));
    CHECK(run("stats " + (sb / "zero.pgm").string() + " --format json", sb / "st.json") == 0);
    auto st = nlohmann::json::parse(slurp(sb / "st.json"));
    CHECK(st["ones_fraction"] == 0.0);
    CHECK(st["zero_pixel_fraction"] == 1.0);
    CHECK(st["chi_square_256"].get<double>() > 0.0);
}

TEST_CASE("cli attack with in-process oracle, persistence and resume") {
    Sandbox sb;
    std::mt19937 rng(707);
    const auto key = icbsif::MasterKey::from_hex(kKey);
    const Image p = testutil::random_image(rng, 16, 16);
    icbsif::save_pgm(sb / "c.pgm", icbsif::encrypt(p, key));

    const std::string common = (sb / "c.pgm").string() + " " + (sb / "rec.pgm").string() +
                               " --key " + kKey + " --codebook-dir " + (sb / "cb").string() +
                               " --jobs 2 --verify --format json";
    CHECK(run("attack " + common, sb / "rep.json") == 0);
    auto rep = nlohmann::json::parse(slurp(sb / "rep.json"));
    CHECK(rep["queries_issued"] == 257);
    CHECK(rep["verified"] == true);
    CHECK(icbsif::load_pgm(sb / "rec.pgm") == p);

    // resume: the persisted codebook answers everything except the verify query
    CHECK(run("attack " + common, sb / "rep2.json") == 0);
    auto rep2 = nlohmann::json::parse(slurp(sb / "rep2.json"));
    CHECK(rep2["queries_issued"] == 0);
    CHECK(rep2["codebook_loaded"] == true);
    CHECK(icbsif::load_pgm(sb / "rec.pgm") == p);
}

TEST_CASE("cli attack against the improved cipher reports the mismatch") {
    Sandbox sb;
    std::mt19937 rng(708);
    const auto key = icbsif::MasterKey::from_hex(kKey);
    const Image p = testutil::random_image(rng, 16, 16);
    icbsif::save_pgm(sb / "c.pgm", icbsif::encrypt_improved(p, key, {3, 0, false}));

    CHECK(run("attack " + (sb / "c.pgm").string() + " " + (sb / "rec.pgm").string() + " --key " +
                  kKey + " --cipher improved --rounds 3 --verify --format json",
              sb / "rep.json") == 1);
    auto rep = nlohmann::json::parse(slurp(sb / "rep.json"));
    CHECK(rep["verified"] == false);
    CHECK(rep["verify_mismatch_fraction"].get<double>() > 0.9);
}

TEST_CASE("cli attack through an external oracle command") {
    Sandbox sb;
    std::mt19937 rng(709);
    const auto key = icbsif::MasterKey::from_hex(kKey);
    const Image p = testutil::random_image(rng, 9, 9);
    icbsif::save_pgm(sb / "c.pgm", icbsif::encrypt(p, key));

    // the tool itself plays the decryption machine, one process per query
    const std::string oracle = cli_bin() + " decrypt --key " + kKey;
    CHECK(run("attack " + (sb / "c.pgm").string() + " " + (sb / "rec.pgm").string() +
                  " --oracle-cmd '" + oracle + "' --jobs 4 --verify --format json",
              sb / "rep.json") == 0);
    auto rep = nlohmann::json::parse(slurp(sb / "rep.json"));
    CHECK(rep["queries_issued"] == 82);
    CHECK(rep["verified"] == true);
    CHECK(icbsif::load_pgm(sb / "rec.pgm") == p);
}

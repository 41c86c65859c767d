// Transmit-side stream assembly and rate bookkeeping. Stream layout is
// checked against a hand-built expectation, rates against longhand
// arithmetic.

#include <sstream>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "evlink/tx.hpp"

using namespace evlink;

namespace {

tx::TxConfig small_config() {
    tx::TxConfig cfg;
    cfg.n_clusters = 4;
    cfg.leds_per_cluster = 6;
    cfg.pilots = codes::pilot_codebook(16, 4);
    cfg.info_book = codes::pilot_codebook(16, 16);
    return cfg;
}

}  // namespace

TEST_CASE("session streams are preamble then pilot/info frames verbatim") {
    auto cfg = small_config();
    const std::vector<std::vector<int>> symbols = {{3, 0, 15, 7}, {12, 12, 1, 9}};
    const auto s = tx::build_session(cfg, symbols);

    REQUIRE(s.n_frames == 2);
    REQUIRE(s.streams.size() == 4);
    for (int k = 0; k < 4; ++k) {
        // Oracle: assemble the expected chip stream longhand.
        codes::Chips expect = cfg.preamble;
        for (int f = 0; f < 2; ++f) {
            const auto& pilot = cfg.pilots[k].chips;
            const auto& info = cfg.info_book[symbols[f][k]].chips;
            expect.insert(expect.end(), pilot.begin(), pilot.end());
            expect.insert(expect.end(), info.begin(), info.end());
        }
        CHECK(s.streams[k].cluster == k);
        CHECK(s.streams[k].chips == expect);
        CHECK(int(expect.size()) == s.chips_per_cluster());
    }
    CHECK(s.symbols == symbols);
}

TEST_CASE("session time bookkeeping places frames after the preamble") {
    auto cfg = small_config();
    const auto s = tx::build_session(cfg, {{0, 0, 0, 0}});
    CHECK(s.boundary_us(0) == doctest::Approx(0.0));
    CHECK(s.boundary_us(1) == doctest::Approx(100.0));
    CHECK(s.frame_start_us(0) == doctest::Approx(13 * 100.0));
    CHECK(cfg.chip_period_us() == doctest::Approx(100.0));
}

TEST_CASE("build_session validates shapes, ranges and codebook consistency") {
    auto cfg = small_config();
    CHECK_THROWS_AS(tx::build_session(cfg, {{0, 0, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(tx::build_session(cfg, {{0, 0, 0, 16}}), std::invalid_argument);
    CHECK_THROWS_AS(tx::build_session(cfg, {{0, 0, 0, -1}}), std::invalid_argument);

    auto bad = cfg;
    bad.pilot_len = 8; // pilots are 16 chips long
    CHECK_THROWS_AS(tx::build_session(bad, {{0, 0, 0, 0}}), std::invalid_argument);

    bad = cfg;
    bad.n_clusters = 5; // only 4 pilots configured
    CHECK_THROWS_AS(tx::build_session(bad, {{0, 0, 0, 0, 0}}), std::invalid_argument);
}

TEST_CASE("spread_info returns the selected codeword chips") {
    const auto book = codes::pilot_codebook(16, 16);
    for (int s = 0; s < 16; ++s) CHECK(tx::spread_info(s, book) == book[s].chips);
    CHECK_THROWS_AS(tx::spread_info(16, book), std::invalid_argument);
    CHECK_THROWS_AS(tx::spread_info(-1, book), std::invalid_argument);
}

TEST_CASE("random payloads are seed-deterministic and in range") {
    auto cfg = small_config();
    const auto a = tx::random_symbols(cfg, 40, 99);
    const auto b = tx::random_symbols(cfg, 40, 99);
    const auto c = tx::random_symbols(cfg, 40, 100);
    CHECK(a == b);
    CHECK(a != c);
    REQUIRE(a.size() == 40);
    int used[16] = {};
    for (const auto& row : a) {
        REQUIRE(row.size() == 4);
        for (int s : row) {
            REQUIRE(s >= 0);
            REQUIRE(s < 16);
            ++used[s];
        }
    }
    // 160 draws over 16 symbols: every symbol should appear.
    for (int s = 0; s < 16; ++s) CHECK(used[s] > 0);
}

TEST_CASE("rate accounting matches longhand arithmetic") {
    tx::TxConfig cfg; // defaults: 10 kHz, 16+16 chips, 16 clusters
    CHECK(cfg.frame_chips() == 32);
    CHECK(cfg.frame_period_s() == 32 / 10000.0);
    CHECK(cfg.update_rate_hz() == 312.5);
    CHECK(cfg.bits_per_symbol() == 4);
    CHECK(cfg.n_leds() == 96);

    const auto r = tx::nominal_data_rate(cfg, cfg.bits_per_symbol());
    CHECK(r.frame_period_s == 32 / 10000.0);
    CHECK(r.update_rate_hz == 312.5);
    // 312.5 updates/s x 4 bits x 16 clusters.
    CHECK(r.total_bps == doctest::Approx(20000.0));
    CHECK(r.per_led_bps == doctest::Approx(20000.0 / 96.0));

    CHECK(tx::per_led_rate(27000.0, 96) == 281.25);
    CHECK(tx::per_led_rate(20000.0, 96) == doctest::Approx(208.3333333));
}

TEST_CASE("extended codebook doubles the alphabet to five bits") {
    tx::TxConfig cfg;
    cfg.info_book = codes::extended_codebook(16);
    CHECK(cfg.bits_per_symbol() == 5);
}

TEST_CASE("chip trace lists every cluster chip at integer boundaries") {
    auto cfg = small_config();
    const auto s = tx::build_session(cfg, {{1, 2, 3, 4}});
    std::ostringstream os;
    tx::write_chip_trace(os, s);

    std::istringstream is(os.str());
    std::string line;
    REQUIRE(std::getline(is, line));
    CHECK(line == "time_us,cluster_id,chip");
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == s.chips_per_cluster() * 4);
}

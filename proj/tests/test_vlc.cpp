// Information decoding: presence-weighted integration, codeword matching
// and bit-error accounting, each against longhand expectations.

#include <optional>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "evlink/vlc.hpp"

using namespace evlink;

namespace {

presence::PresenceMap two_cell_map(float w0, float w1) {
    presence::PresenceMap m;
    m.roi = frontend::RoiWindow{0, 0, 2, 2};
    m.grid = presence::GridSpec{2, 1};
    m.cols = 1;
    m.rows = 2;
    m.w.assign(1, {w0, w1});
    return m;
}

}  // namespace

TEST_CASE("integration weights cell segments by their presence") {
    const auto map = two_cell_map(0.8f, 0.2f);
    const codes::Chips s{1, -1, 1, 1, -1, 1, -1, -1};
    codes::Chips neg(s.size());
    for (size_t i = 0; i < s.size(); ++i) neg[i] = std::int8_t(-s[i]);

    // Opposing segments at weights 0.8 and 0.2: the sum is 0.6 x segment.
    auto r = vlc::integrate_info(map, 0, {s, neg}, 0.1);
    REQUIRE(r.value.size() == s.size());
    CHECK(r.n_cells == 2);
    for (size_t i = 0; i < s.size(); ++i)
        CHECK(r.value[i] == doctest::Approx(0.8 * s[i] + 0.2 * neg[i]).epsilon(1e-6));

    // A 0.5 threshold gates the weak cell out.
    r = vlc::integrate_info(map, 0, {s, neg}, 0.5);
    CHECK(r.n_cells == 1);
    for (size_t i = 0; i < s.size(); ++i)
        CHECK(r.value[i] == doctest::Approx(0.8 * s[i]).epsilon(1e-6));

    // Nothing reaches the threshold: cluster absent.
    r = vlc::integrate_info(map, 0, {s, neg}, 0.9);
    CHECK(r.n_cells == 0);
    for (double v : r.value) CHECK(v == 0.0);
}

TEST_CASE("decode recovers every symbol from its own pair signature") {
    const auto book = codes::pilot_codebook(16, 16);
    for (int s = 0; s < 16; ++s) {
        const auto sig = codes::pair_signature(book[s]);
        std::vector<double> integrated(sig.begin(), sig.end());
        // An arbitrary positive gain must not change the winner.
        for (auto& v : integrated) v *= 2.75;
        const auto d = vlc::decode_frame(integrated, book);
        CHECK_FALSE(d.failed);
        CHECK(d.symbol == s);
        CHECK(d.match.id == book[s].id);
        CHECK(d.match.score == doctest::Approx(8.0 * 2.75));
        CHECK(d.match.margin == doctest::Approx(8.0 * 2.75));
    }
}

TEST_CASE("decode ties break toward the lowest codeword identity") {
    const auto book = codes::pilot_codebook(16, 16);
    const auto sa = codes::pair_signature(book[4]);
    const auto sb = codes::pair_signature(book[9]);
    std::vector<double> mix(sa.size());
    for (size_t i = 0; i < sa.size(); ++i) mix[i] = double(sa[i]) + double(sb[i]);
    const auto d = vlc::decode_frame(mix, book);
    // book[4] is row 9 plain, book[9] is row 3 inverted: row 3 orders first.
    CHECK(d.symbol == 9);
    CHECK(codes::id_less(book[9].id, book[4].id));
    CHECK(d.match.margin == doctest::Approx(0.0));
}

TEST_CASE("decode declares failure on empty integration") {
    const auto book = codes::pilot_codebook(16, 16);
    auto d = vlc::decode_frame(std::vector<double>(8, 0.0), book);
    CHECK(d.failed);
    CHECK(d.symbol == -1);
    d = vlc::decode_frame({}, book);
    CHECK(d.failed);
    CHECK_THROWS_AS(vlc::decode_frame(std::vector<double>(8, 1.0), {}), std::invalid_argument);
}

TEST_CASE("bit error accounting bins by distance and counts bit flips") {
    using Row = std::vector<std::optional<int>>;
    const std::vector<Row> decoded = {
        {5, 6},              // symbol 5 ok; 6 vs 5: 0110 vs 0101 -> 2 bits
        {std::nullopt, 0},   // erasure: all 4 bits count; 0 vs 8: 1 bit
        {15, 15},            // both exact
    };
    const std::vector<std::vector<int>> reference = {{5, 5}, {7, 8}, {15, 15}};
    // nullopt vs 7 contributes bits_per_symbol errors by definition.
    const std::vector<double> dist = {34.9, 35.0, 47.2};

    const auto rep = vlc::ber(decoded, reference, dist, 4, 8.0);
    CHECK(rep.bits == 24);
    CHECK(rep.errors == 2 + 4 + 1);
    CHECK(rep.ber() == doctest::Approx(7.0 / 24.0));

    REQUIRE(rep.bins.size() == 2);
    CHECK(rep.bins[0].bin_mid_m == 35.0);
    CHECK(rep.bins[0].bits == 16);
    CHECK(rep.bins[0].errors == 7);
    CHECK(rep.bins[0].speed_mps == 8.0);
    CHECK(rep.bins[1].bin_mid_m == 45.0);
    CHECK(rep.bins[1].bits == 8);
    CHECK(rep.bins[1].errors == 0);
    CHECK(rep.bins[1].ber() == 0.0);
}

TEST_CASE("bit error accounting rejects mismatched shapes") {
    using Row = std::vector<std::optional<int>>;
    const std::vector<Row> decoded = {{1, 2}};
    CHECK_THROWS_AS(vlc::ber(decoded, {{1}}, {30.0}, 4, 8.0), std::invalid_argument);
    CHECK_THROWS_AS(vlc::ber(decoded, {{1, 2}}, {30.0, 40.0}, 4, 8.0),
                    std::invalid_argument);
}

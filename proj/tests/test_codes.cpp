// Spreading-code construction against independent oracles: the closed-form
// Walsh-Hadamard entry (parity of popcount(i & j)), brute-force checks of
// the pairwise-inverting property, and textbook Barker sequences.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "evlink/codes.hpp"

using namespace evlink;

namespace {

// Closed form for the Sylvester construction: entry (i, j) is +1 when
// popcount(i & j) is even. Independent of the recursive builder under test.
int wh_entry_oracle(int i, int j) {
    unsigned v = static_cast<unsigned>(i) & static_cast<unsigned>(j);
    int bits = 0;
    while (v) {
        bits += static_cast<int>(v & 1u);
        v >>= 1;
    }
    return (bits % 2 == 0) ? 1 : -1;
}

long dot(const codes::Chips& a, const codes::Chips& b) {
    REQUIRE(a.size() == b.size());
    long s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += long(a[i]) * long(b[i]);
    return s;
}

codes::Chips negated(codes::Chips c) {
    for (auto& v : c) v = static_cast<std::int8_t>(-v);
    return c;
}

}  // namespace

TEST_CASE("walsh-hadamard matrix matches the closed-form entry oracle") {
    for (int order : {1, 2, 4, 8, 16, 32, 64}) {
        const auto m = codes::wh_matrix(order);
        REQUIRE(int(m.size()) == order);
        for (int i = 0; i < order; ++i) {
            REQUIRE(int(m[i].size()) == order);
            for (int j = 0; j < order; ++j)
                CHECK(int(m[i][j]) == wh_entry_oracle(i, j));
        }
    }
}

TEST_CASE("walsh-hadamard rows are mutually orthogonal up to order 64") {
    for (int order : {2, 4, 8, 16, 32, 64}) {
        const auto m = codes::wh_matrix(order);
        for (int i = 0; i < order; ++i)
            for (int j = 0; j < order; ++j)
                CHECK(dot(m[i], m[j]) == (i == j ? order : 0));
    }
}

TEST_CASE("inverted codeword correlates to minus the order against itself") {
    for (int order : {2, 16, 64}) {
        const auto m = codes::wh_matrix(order);
        for (int i = 0; i < order; ++i)
            CHECK(dot(negated(m[i]), m[i]) == -order);
    }
}

TEST_CASE("wh_matrix rejects non-power-of-two orders") {
    for (int bad : {0, -1, 3, 6, 12, 100})
        CHECK_THROWS_AS(codes::wh_matrix(bad), std::invalid_argument);
}

TEST_CASE("pairwise-inverting rows are exactly the odd indices") {
    for (int order : {2, 4, 8, 16, 32, 64}) {
        const auto m = codes::wh_matrix(order);

        // Oracle: scan every row for the defining property chip[2i] =
        // -chip[2i-1] (1-indexed pairs).
        std::vector<int> expect;
        for (int r = 0; r < order; ++r) {
            bool ok = true;
            for (int p = 0; p + 1 < order; p += 2)
                if (m[r][p] != -m[r][p + 1]) {
                    ok = false;
                    break;
                }
            if (ok) expect.push_back(r);
        }

        const auto got = codes::pairwise_inverting_rows(order);
        CHECK(got == expect);
        CHECK(int(got.size()) == order / 2);
        for (int r : got) CHECK(r % 2 == 1);
    }
    CHECK(codes::pairwise_inverting_rows(16) ==
          std::vector<int>{1, 3, 5, 7, 9, 11, 13, 15});
}

TEST_CASE("barker sequences match the textbook values") {
    // Canonical +/- sequences for every supported length.
    const std::vector<std::pair<int, codes::Chips>> known = {
        {2, {1, -1}},
        {3, {1, 1, -1}},
        {4, {1, 1, -1, 1}},
        {5, {1, 1, 1, -1, 1}},
        {7, {1, 1, 1, -1, -1, 1, -1}},
        {11, {1, 1, 1, -1, -1, -1, 1, -1, -1, 1, -1}},
        {13, {1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1}},
    };
    for (const auto& [len, chips] : known) CHECK(codes::barker(len) == chips);
    for (int bad : {0, 1, 6, 8, 12, 14}) CHECK_THROWS_AS(codes::barker(bad), std::invalid_argument);
}

TEST_CASE("barker off-peak aperiodic autocorrelation stays within one") {
    for (int len : {2, 3, 4, 5, 7, 11, 13}) {
        const auto b = codes::barker(len);
        for (int k = 1; k < len; ++k) {
            long s = 0;
            for (int i = 0; i + k < len; ++i) s += long(b[i]) * long(b[i + k]);
            CHECK(std::abs(s) <= 1);
        }
        // Zero lag is the full energy.
        CHECK(dot(b, b) == len);
    }
}

TEST_CASE("pair signature extracts the even-position chips") {
    const auto book = codes::pilot_codebook(16, 16);
    for (const auto& cw : book) {
        const auto sig = codes::pair_signature(cw);
        REQUIRE(sig.size() == cw.chips.size() / 2);
        for (size_t i = 0; i < sig.size(); ++i)
            CHECK(sig[i] == cw.chips[2 * i + 1]); // 1-indexed even = 0-based odd
    }
}

TEST_CASE("pair signatures of order-16 odd rows reproduce order-8 rows negated") {
    const auto h16 = codes::wh_matrix(16);
    const auto h8 = codes::wh_matrix(8);
    for (int a = 0; a < 8; ++a) {
        codes::Codeword cw{{2 * a + 1, false}, h16[2 * a + 1]};
        CHECK(codes::pair_signature(cw) == negated(h8[a]));
    }
}

TEST_CASE("transition signature marks exactly the level changes") {
    // Oracle: walk the chips with an explicit previous level.
    auto oracle = [](const codes::Chips& chips, std::int8_t prev) {
        codes::Chips out(chips.size(), 0);
        for (size_t i = 0; i < chips.size(); ++i) {
            if (chips[i] != prev) out[i] = chips[i];
            prev = chips[i];
        }
        return out;
    };

    const auto m = codes::wh_matrix(16);
    for (int r = 0; r < 16; ++r)
        for (std::int8_t prev : {std::int8_t(-1), std::int8_t(+1)})
            CHECK(codes::transition_signature(m[r], prev) == oracle(m[r], prev));

    // Constant stream from the same level: silent.
    codes::Chips ones(8, 1);
    CHECK(codes::transition_signature(ones, 1) == codes::Chips(8, 0));
    // From the opposite level: one event at the first chip.
    codes::Chips expect(8, 0);
    expect[0] = 1;
    CHECK(codes::transition_signature(ones, -1) == expect);
}

TEST_CASE("pairwise-inverting codewords always fire at pair boundaries") {
    // The property the whole receiver rests on: within every 1-indexed pair
    // (2i-1, 2i) the second chip inverts the first, so the transition into
    // that chip always produces an event regardless of history.
    const auto book = codes::pilot_codebook(16, 16);
    for (const auto& cw : book)
        for (std::int8_t prev : {std::int8_t(-1), std::int8_t(+1)}) {
            const auto sig = codes::transition_signature(cw.chips, prev);
            for (size_t i = 1; i < sig.size(); i += 2) {
                CHECK(sig[i] == cw.chips[i]);
                CHECK(sig[i] != 0);
            }
        }
}

TEST_CASE("pilot codebook lists the odd rows plain then inverted") {
    const auto book = codes::pilot_codebook(16, 16);
    const auto m = codes::wh_matrix(16);
    REQUIRE(book.size() == 16);
    for (int k = 0; k < 8; ++k) {
        CHECK(book[k].id.row == 2 * k + 1);
        CHECK_FALSE(book[k].id.inverted);
        CHECK(book[k].chips == m[2 * k + 1]);
        CHECK(book[k + 8].id.row == 2 * k + 1);
        CHECK(book[k + 8].id.inverted);
        CHECK(book[k + 8].chips == negated(m[2 * k + 1]));
    }
    CHECK(codes::pilot_codebook(16, 4).size() == 4);
    CHECK_THROWS_AS(codes::pilot_codebook(16, 17), std::invalid_argument);
}

TEST_CASE("extended codebook covers all rows in both polarities") {
    const auto book = codes::extended_codebook(16);
    const auto m = codes::wh_matrix(16);
    REQUIRE(book.size() == 32);
    for (int r = 0; r < 16; ++r) {
        CHECK(book[r].id.row == r);
        CHECK_FALSE(book[r].id.inverted);
        CHECK(book[r].chips == m[r]);
        CHECK(book[r + 16].id.row == r);
        CHECK(book[r + 16].id.inverted);
        CHECK(book[r + 16].chips == negated(m[r]));
    }
}

TEST_CASE("transform decode recovers every codeword with full margin") {
    const auto book = codes::pilot_codebook(16, 16);
    for (const auto& cw : book) {
        const auto r = codes::wh_transform_decode(cw.chips, book);
        CHECK(r.id == cw.id);
        CHECK(r.score == doctest::Approx(16.0));
        // Orthogonal rows score 0; the inverted twin scores -16.
        CHECK(r.margin == doctest::Approx(16.0));
    }
}

TEST_CASE("transform decode breaks exact ties toward the lowest identity") {
    const auto book = codes::pilot_codebook(16, 16);
    // Sum of two codewords correlates equally with both; the lower row in
    // its non-inverted polarity must win.
    std::vector<double> mix(16);
    for (int i = 0; i < 16; ++i) mix[i] = double(book[2].chips[i]) + double(book[5].chips[i]);
    const auto r = codes::wh_transform_decode(mix, book);
    CHECK(r.id == book[2].id);
    CHECK(r.margin == doctest::Approx(0.0));

    // All-zero input ties the whole book at zero score.
    const auto z = codes::wh_transform_decode(std::vector<double>(16, 0.0), book);
    CHECK(z.id == book[0].id);
}

TEST_CASE("correlation helpers reject malformed input") {
    const auto book = codes::pilot_codebook(16, 16);
    CHECK_THROWS_AS(codes::cross_correlate(codes::Chips{1, -1}, book[0].chips),
                    std::invalid_argument);
    CHECK_THROWS_AS(codes::wh_transform_decode(std::vector<double>(8, 1.0), book),
                    std::invalid_argument);
    CHECK_THROWS_AS(codes::wh_transform_decode(book[0].chips, {}), std::invalid_argument);
}

#include "evlink/codes.hpp"

#include <stdexcept>
#include <string>

namespace evlink::codes {

namespace {

bool is_power_of_two(int v) { return v >= 1 && (v & (v - 1)) == 0; }

}  // namespace

std::vector<Chips> wh_matrix(int order) {
    if (!is_power_of_two(order))
        throw std::invalid_argument("wh_matrix: order must be a power of two, got " +
                                    std::to_string(order));
    std::vector<Chips> h(1, Chips{1});
    for (int n = 1; n < order; n *= 2) {
        std::vector<Chips> next(2 * n, Chips(2 * n));
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const std::int8_t v = h[i][j];
                next[i][j] = v;
                next[i][j + n] = v;
                next[i + n][j] = v;
                next[i + n][j + n] = static_cast<std::int8_t>(-v);
            }
        }
        h.swap(next);
    }
    return h;
}

std::vector<int> pairwise_inverting_rows(int order) {
    const auto h = wh_matrix(order);
    std::vector<int> rows;
    for (int i = 0; i < order; ++i) {
        bool inverting = order >= 2;
        for (int k = 0; 2 * k + 1 < order; ++k) {
            if (h[i][2 * k + 1] != -h[i][2 * k]) {
                inverting = false;
                break;
            }
        }
        if (inverting) rows.push_back(i);
    }
    return rows;
}

long cross_correlate(const Chips& received, const Chips& code) {
    if (received.size() != code.size())
        throw std::invalid_argument("cross_correlate: length mismatch");
    long acc = 0;
    for (size_t i = 0; i < code.size(); ++i) acc += long(received[i]) * long(code[i]);
    return acc;
}

double cross_correlate(const std::vector<double>& received, const Chips& code) {
    if (received.size() != code.size())
        throw std::invalid_argument("cross_correlate: length mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < code.size(); ++i) acc += received[i] * double(code[i]);
    return acc;
}

DecodeResult wh_transform_decode(const std::vector<double>& received,
                                 const std::vector<Codeword>& codebook) {
    if (codebook.empty())
        throw std::invalid_argument("wh_transform_decode: empty codebook");
    bool have_best = false;
    DecodeResult best;
    double runner_up = 0.0;
    bool have_runner_up = false;
    for (const Codeword& cw : codebook) {
        const double score = cross_correlate(received, cw.chips);
        if (!have_best || score > best.score ||
            (score == best.score && id_less(cw.id, best.id))) {
            if (have_best) {
                runner_up = best.score;
                have_runner_up = true;
            }
            best.id = cw.id;
            best.score = score;
            have_best = true;
        } else if (!have_runner_up || score > runner_up) {
            runner_up = score;
            have_runner_up = true;
        }
    }
    best.margin = have_runner_up ? best.score - runner_up : 0.0;
    return best;
}

DecodeResult wh_transform_decode(const Chips& received,
                                 const std::vector<Codeword>& codebook) {
    std::vector<double> r(received.begin(), received.end());
    return wh_transform_decode(r, codebook);
}

Chips barker(int length) {
    switch (length) {
        case 2:  return {1, -1};
        case 3:  return {1, 1, -1};
        case 4:  return {1, 1, -1, 1};
        case 5:  return {1, 1, 1, -1, 1};
        case 7:  return {1, 1, 1, -1, -1, 1, -1};
        case 11: return {1, 1, 1, -1, -1, -1, 1, -1, -1, 1, -1};
        case 13: return {1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1};
        default:
            throw std::invalid_argument("barker: no Barker sequence of length " +
                                        std::to_string(length));
    }
}

Chips pair_signature(const Codeword& code) {
    if (code.chips.size() % 2 != 0)
        throw std::invalid_argument("pair_signature: chip count must be even");
    Chips sig(code.chips.size() / 2);
    for (size_t i = 0; i < sig.size(); ++i) sig[i] = code.chips[2 * i + 1];
    return sig;
}

Chips transition_signature(const Chips& chips, std::int8_t prev_level) {
    Chips sig(chips.size());
    std::int8_t prev = prev_level;
    for (size_t i = 0; i < chips.size(); ++i) {
        sig[i] = (chips[i] != prev) ? chips[i] : std::int8_t{0};
        prev = chips[i];
    }
    return sig;
}

std::vector<Codeword> pilot_codebook(int order, int n_clusters) {
    const auto rows = pairwise_inverting_rows(order);
    if (n_clusters < 1 || n_clusters > 2 * static_cast<int>(rows.size()))
        throw std::invalid_argument("pilot_codebook: need 1.." +
                                    std::to_string(2 * rows.size()) +
                                    " clusters at order " + std::to_string(order));
    const auto h = wh_matrix(order);
    std::vector<Codeword> book;
    book.reserve(n_clusters);
    const int half = static_cast<int>(rows.size());
    for (int k = 0; k < n_clusters; ++k) {
        const bool inverted = k >= half;
        const int row = rows[k % half];
        Chips chips = h[row];
        if (inverted)
            for (auto& c : chips) c = static_cast<std::int8_t>(-c);
        book.push_back(Codeword{CodewordId{row, inverted}, std::move(chips)});
    }
    return book;
}

std::vector<Codeword> extended_codebook(int order) {
    const auto h = wh_matrix(order);
    std::vector<Codeword> book;
    book.reserve(2 * order);
    for (int pass = 0; pass < 2; ++pass) {
        const bool inverted = pass == 1;
        for (int row = 0; row < order; ++row) {
            Chips chips = h[row];
            if (inverted)
                for (auto& c : chips) c = static_cast<std::int8_t>(-c);
            book.push_back(Codeword{CodewordId{row, inverted}, std::move(chips)});
        }
    }
    return book;
}

}  // namespace evlink::codes

// Walsh-Hadamard spreading codes and Barker synchronization sequences.
//
// Chips are bipolar (+1/-1). A codeword is a Walsh-Hadamard matrix row,
// optionally inverted (all chips negated). The codebooks built here favour
// "pairwise inverting" rows, i.e. rows whose 1-indexed chip pairs satisfy
// chip[2i] = -chip[2i-1]: those codewords toggle inside every pair, so a
// receiver that only sees level transitions can sample them reliably.

#pragma once

#include <cstdint>
#include <vector>

namespace evlink::codes {

using Chips = std::vector<std::int8_t>;

struct CodewordId {
    int row = 0;           // Walsh-Hadamard row index, 0-based
    bool inverted = false; // true: all chips negated

    friend bool operator==(const CodewordId&, const CodewordId&) = default;
};

// Ordering used for decode tie-breaks: lowest row first, non-inverted first.
inline bool id_less(const CodewordId& a, const CodewordId& b) {
    if (a.row != b.row) return a.row < b.row;
    return static_cast<int>(a.inverted) < static_cast<int>(b.inverted);
}

struct Codeword {
    CodewordId id;
    Chips chips;
};

struct DecodeResult {
    CodewordId id;
    double score = 0.0;  // correlation against the winning codeword
    double margin = 0.0; // score minus the runner-up score
};

// Sylvester-construction Walsh-Hadamard matrix. `order` must be a power of
// two >= 1; throws std::invalid_argument otherwise. result[i][j] in {+1,-1}.
std::vector<Chips> wh_matrix(int order);

// Row indices of wh_matrix(order) whose 1-indexed chip pairs all satisfy
// chip[2i] = -chip[2i-1]. Ascending; exactly order/2 entries for order >= 2.
std::vector<int> pairwise_inverting_rows(int order);

// Plain dot product; throws std::invalid_argument on length mismatch.
long cross_correlate(const Chips& received, const Chips& code);
double cross_correlate(const std::vector<double>& received, const Chips& code);

// Correlates `received` against every codebook entry and returns the best
// match. Ties break toward the lowest CodewordId (id_less). Throws
// std::invalid_argument on empty codebook or length mismatch.
DecodeResult wh_transform_decode(const std::vector<double>& received,
                                 const std::vector<Codeword>& codebook);
DecodeResult wh_transform_decode(const Chips& received,
                                 const std::vector<Codeword>& codebook);

// Canonical Barker sequence; supported lengths 2,3,4,5,7,11,13.
Chips barker(int length);

// Expected pair-level signature of a codeword: its chips at even 1-indexed
// positions (the positions a transition receiver always observes for
// pairwise-inverting codewords). Length chips.size()/2.
Chips pair_signature(const Codeword& code);

// Per-chip transition signature: entry j is chips[j] where the level changes
// coming from the previous chip (prev_level ahead of chips[0]), else 0.
// This is the event-polarity pattern an ideal transition sensor reports.
Chips transition_signature(const Chips& chips, std::int8_t prev_level);

// Pilot codebook: one codeword per cluster. The first n/2 clusters get the
// pairwise-inverting rows in ascending order, the rest the same rows
// inverted. Requires n_clusters <= order (order/2 rows x 2 polarities).
std::vector<Codeword> pilot_codebook(int order, int n_clusters);

// Extended codebook over all rows: order non-inverted rows ascending, then
// the same rows inverted. 2*order entries, log2(2*order) bits per symbol.
std::vector<Codeword> extended_codebook(int order);

}  // namespace evlink::codes

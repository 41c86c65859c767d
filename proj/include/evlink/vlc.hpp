// Information decoding: presence-weighted integration of grid waveforms and
// codeword matching, plus bit-error accounting.

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "evlink/codes.hpp"
#include "evlink/presence.hpp"

namespace evlink::vlc {

// Presence-weighted sum of pair-level info segments over one cluster's
// above-threshold cells.
struct IntegratedInfo {
    std::vector<double> value; // pair-level, length info_len/2
    int n_cells = 0;           // contributing cells; 0 means cluster absent
};

// info_pairs[cell] is the reconstructed pair-level info segment of that
// cell (all cells share one length). Cells with map.w[cluster][cell] >=
// threshold contribute weight * segment.
IntegratedInfo integrate_info(const presence::PresenceMap& map, int cluster,
                              const std::vector<codes::Chips>& info_pairs,
                              double threshold);

struct DecodedFrame {
    int symbol = -1;           // info codebook index; -1 when failed
    codes::DecodeResult match; // winning codeword, score, margin
    bool failed = false;       // all-zero integration, nothing to decode
};

// Correlates the integrated pair-level signal against every codeword's pair
// signature; the alphabet index of the winner is the symbol.
DecodedFrame decode_frame(const std::vector<double>& integrated,
                          const std::vector<codes::Codeword>& info_book);

// One bin of the bit-error tally (10 m distance bins, bin_mid = lower+5).
struct BerBin {
    double bin_mid_m = 0.0;
    double speed_mps = 0.0;
    std::uint64_t errors = 0;
    std::uint64_t bits = 0;

    double ber() const { return bits ? double(errors) / double(bits) : 0.0; }
};

struct BerReport {
    std::vector<BerBin> bins; // ascending bin_mid
    std::uint64_t errors = 0;
    std::uint64_t bits = 0;

    double ber() const { return bits ? double(errors) / double(bits) : 0.0; }
};

// Compares decoded symbols against the transmitted reference, binning by
// the true distance attached to each frame. Symbols map to
// bits_per_symbol-wide natural binary; an absent decode (std::nullopt)
// counts all its bits as errors. Shapes must match.
BerReport ber(const std::vector<std::vector<std::optional<int>>>& decoded,
              const std::vector<std::vector<int>>& reference,
              const std::vector<double>& frame_distance_m, int bits_per_symbol,
              double speed_mps);

}  // namespace evlink::vlc

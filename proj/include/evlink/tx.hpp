// Transmit-side signal construction for the LED bar.
//
// A session is one Barker preamble followed by an integer number of frames.
// Every frame carries, per cluster, a fixed pilot codeword (unique to the
// cluster) and one information codeword chosen by the payload symbol. All
// clusters blink on a shared chip clock, so chip boundaries line up across
// the whole bar. On-off keying: chip +1 = LED on, chip -1 = LED off.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "evlink/codes.hpp"

namespace evlink::tx {

struct TxConfig {
    double blink_rate_hz = 10000.0; // chip rate
    int pilot_len = 16;             // chips per pilot segment
    int info_len = 16;              // chips per info segment
    int n_clusters = 16;
    int leds_per_cluster = 6;
    codes::Chips preamble = codes::barker(13);
    // Pilot codeword per cluster (index = cluster id).
    std::vector<codes::Codeword> pilots = codes::pilot_codebook(16, 16);
    // Symbol alphabet for the info segment. Defaults to the same pairwise-
    // inverting book as the pilots (4 bits/symbol): a transition receiver
    // can reconstruct every codeword in it. An extended_codebook() can be
    // configured instead for rate studies.
    std::vector<codes::Codeword> info_book = codes::pilot_codebook(16, 16);

    int frame_chips() const { return pilot_len + info_len; }
    double chip_period_us() const { return 1.0e6 / blink_rate_hz; }
    double frame_period_s() const { return frame_chips() / blink_rate_hz; }
    double update_rate_hz() const { return blink_rate_hz / frame_chips(); }
    int bits_per_symbol() const;
    int n_leds() const { return n_clusters * leds_per_cluster; }
};

// Rate bookkeeping for a configuration.
struct RateReport {
    double frame_period_s = 0.0;
    double update_rate_hz = 0.0;  // frames (hence presence updates) per second
    double total_bps = 0.0;       // all clusters combined
    double per_led_bps = 0.0;
};

// Chip stream of one cluster over a whole session.
struct ClusterStream {
    int cluster = 0;
    codes::Chips chips; // preamble + n_frames * (pilot + info)
};

struct Session {
    TxConfig config;
    int n_frames = 0;
    std::vector<std::vector<int>> symbols; // [frame][cluster] info_book index
    std::vector<ClusterStream> streams;    // one per cluster, equal length

    int chips_per_cluster() const {
        return static_cast<int>(config.preamble.size()) +
               n_frames * config.frame_chips();
    }
    // Chip boundary i (start of chip i) in microseconds from session start.
    double boundary_us(int chip_index) const {
        return chip_index * config.chip_period_us();
    }
    // Start time of frame f (its first pilot chip).
    double frame_start_us(int frame) const {
        return boundary_us(static_cast<int>(config.preamble.size()) +
                           frame * config.frame_chips());
    }
};

// Returns the chip sequence of info_book[symbol]; bounds-checked.
codes::Chips spread_info(int symbol, const std::vector<codes::Codeword>& info_book);

// Builds per-cluster chip streams for the given payload.
// symbols[frame][cluster] indexes config.info_book. Throws on shape or
// range violations and on config inconsistencies (pilot/info length vs
// codebooks, cluster count vs pilot count).
Session build_session(const TxConfig& config,
                      const std::vector<std::vector<int>>& symbols);

// Random payload helper: n_frames x n_clusters symbol indices from `seed`.
std::vector<std::vector<int>> random_symbols(const TxConfig& config, int n_frames,
                                             std::uint64_t seed);

// Rate accounting at the given bits/symbol (e.g. 4 for a 16-entry book).
RateReport nominal_data_rate(const TxConfig& config, int bits_per_symbol);

// Per-LED share of an arbitrary total rate (reporting helper).
double per_led_rate(double total_bps, int n_leds);

// Chip trace CSV: header "time_us,cluster_id,chip", one row per chip per
// cluster, time = chip start boundary rounded to integer microseconds.
void write_chip_trace(std::ostream& os, const Session& session);

}  // namespace evlink::tx

// End-to-end receiver: event stream in, per-frame symbols and distances out.
//
// Stages: locate the blinking bar with the event-rate filter, synchronize
// the chip clock on the preamble, then walk the stream frame by frame.
// Each frame yields a presence map (which also recentres the region of
// interest for the next frame), decoded info symbols per cluster, and
// pairwise phase-correlation ranges fused into one distance.

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "evlink/events.hpp"
#include "evlink/frontend.hpp"
#include "evlink/presence.hpp"
#include "evlink/sim.hpp"
#include "evlink/tx.hpp"
#include "evlink/vlp.hpp"

namespace evlink::pipeline {

struct ReceiverParams {
    tx::TxConfig tx;          // transmitted signal structure (codebooks, rates)
    sim::CameraModel camera;  // sensor bounds + triangulation constants
    sim::LedBarLayout layout; // cluster baselines

    double filter_window_s = 0.01;     // rate-filter sliding window
    double filter_min_rate_hz = 2000.0;
    double locate_prefix_s = 0.2;      // stream prefix used to find the bar
    int roi_margin_px = 8;             // padding around detected pixels

    presence::GridSpec grid;           // presence cell size (pixels)
    double presence_threshold = 0.5;   // cell weight gate for decode/ranging
    double psr_threshold = 1.8;        // sync validity gate

    int poc_window = 64;               // pixel-probability window side (pow2)
    double min_baseline_m = 0.3;       // pairs closer than this are skipped
    // Clusters never used for ranging (ends of the bar defocus first; the
    // central ones add only tiny baselines). They still carry data.
    std::vector<int> excluded_clusters = {0, 7, 8, 15};
    bool single_pair_mode = false;               // range from one fixed pair
    std::pair<int, int> single_pair = {4, 9};

    int track_max_shift_cells = 5;     // coarse tracking search radius
};

struct FrameRecord {
    int frame_index = 0;
    std::int64_t t_us = 0;    // nominal frame start from the sync estimate
    frontend::RoiWindow roi;  // region the frame was sampled from

    // Decoded info symbol per cluster; -1 when the cluster was absent or
    // the integrated signal was empty.
    std::vector<int> symbols;
    // Max presence weight per cluster (diagnostic).
    std::vector<float> presence;

    std::vector<vlp::RangeEstimate> ranges; // accepted pair measurements
    double distance_m = 0.0;  // fused estimate; NaN when unrangeable
    int n_pairs = 0;          // estimates used by the fusion
    bool degraded = false;    // fallback fusion path (see vlp::aggregate)

    int track_dx_cells = 0;   // coarse shift against the previous frame
    int track_dy_cells = 0;
    bool tracking_lost = false; // no cell reached the presence threshold

    bool ranged() const { return n_pairs > 0; }
};

struct ReceiveResult {
    frontend::SyncResult sync;
    frontend::RoiWindow initial_roi;
    std::vector<FrameRecord> frames;

    std::size_t n_events = 0;          // events offered to the receiver
    std::size_t n_events_filtered = 0; // prefix events surviving the filter
    bool tracking_lost = false;        // stream abandoned before its end
    double realized_update_rate_hz = 0.0; // ranged frames / covered time

    int frames_ranged() const;
};

// Runs the whole receive chain over a sorted event stream. Throws
// frontend::SyncFailed when the bar cannot be located or the preamble
// correlation is not credible; std::invalid_argument on malformed input.
// Tracking loss mid-stream is not an error: processing stops and the
// partial result carries tracking_lost = true.
ReceiveResult receive(const std::vector<Event>& events, const ReceiverParams& params);

}  // namespace evlink::pipeline

// Receiver front-end: activity filtering, region-of-interest gating and
// preamble synchronization.
//
// The blinking bar is found by an event-rate test (a pixel passes when some
// sliding window holds enough events), mimicking a hardware band filter.
// Synchronization slides a chip-spaced sampling comb over the early stream
// and correlates aggregate event polarity per slot against the transition
// signature of the known preamble; the chip clock phase falls out of the
// correlation peak.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "evlink/codes.hpp"
#include "evlink/events.hpp"

namespace evlink::frontend {

// Half-open pixel rectangle [x0,x1) x [y0,y1).
struct RoiWindow {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
    bool empty() const { return x1 <= x0 || y1 <= y0; }
    bool contains(int x, int y) const {
        return x >= x0 && x < x1 && y >= y0 && y < y1;
    }
    RoiWindow expanded(int margin, int sensor_w, int sensor_h) const;

    friend bool operator==(const RoiWindow&, const RoiWindow&) = default;
};

struct FilterResult {
    std::vector<Event> events;           // events on passing pixels, order kept
    std::vector<std::uint32_t> mask;     // passing pixels, packed (y<<16)|x, sorted
    RoiWindow bbox;                      // tight bounds of the mask (empty if none)
};

// Keeps pixels whose event count within some sliding `window_s` reaches
// min_rate_hz * window_s. Throws std::invalid_argument on non-positive
// window/rate or unsorted input.
FilterResult frequency_filter(const std::vector<Event>& events, double window_s,
                              double min_rate_hz);

// Events inside the window, original order preserved.
std::vector<Event> apply_roi(const std::vector<Event>& events, const RoiWindow& roi);

struct SyncResult {
    double t0_us = 0.0;    // estimated start of the first post-preamble chip
    double offset_us = 0.0;// estimated start of the preamble itself
    double peak = 0.0;     // winning correlation score
    double psr = 0.0;      // peak-to-sidelobe ratio of the search
};

struct SyncFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SyncParams {
    double search_lo_us = 0.0;   // trial offsets start
    double search_hi_us = 0.0;   // trial offsets end (inclusive-ish)
    int step_divisor = 4;        // trial step = chip period / step_divisor
    double psr_threshold = 1.8;  // validity gate; below this -> SyncFailed
};

// Scores every trial offset in [search_lo, search_hi] stepped at a quarter
// chip (by default): score = sum over preamble chips of transition-signature
// value times the summed event polarity in that chip's slot. The maximum
// forms a plateau one chip wide; its midpoint plus half a chip estimates the
// true preamble start. Throws SyncFailed when the peak is not positive or
// the peak-to-sidelobe ratio is below threshold; std::invalid_argument on a
// bad search window or unsorted events.
SyncResult barker_sync(const std::vector<Event>& events, const codes::Chips& preamble,
                       double blink_rate_hz, const SyncParams& params);

}  // namespace evlink::frontend

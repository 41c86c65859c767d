// Cluster presence estimation over a grid-divided region of interest.
//
// The ROI is tiled with small grid cells. Each cell's chip waveform is the
// per-slot majority of its pixels' last event polarities; a transition
// receiver only sees every second chip of a pairwise-inverting codeword
// reliably, so waveforms are folded to pair level (with single-sided
// dropout recovery) before correlating against each cluster's pilot
// signature. The normalized positive correlation is the cell's presence
// weight for that cluster.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "evlink/codes.hpp"
#include "evlink/events.hpp"
#include "evlink/frontend.hpp"

namespace evlink::presence {

struct GridSpec {
    // Cells span two pixels for vote redundancy but stay one row tall: the
    // emitters form a vertical column, so pixels in one row always watch the
    // same emitters (the horizontal falloff scales both identically) and the
    // vote can never deadlock between two sources. A two-row cell straddling
    // a boundary between adjacent emitter groups can tie on exactly the slots
    // that distinguish them, and the dropout-recovery fold then stitches the
    // halves into a plausible but wrong codeword.
    int cell_w = 2;
    int cell_h = 1;
};

// Per-slot last event polarity for every pixel of a rectangle; the shared
// sampling stage behind cell waveforms, pilot correlations and probability
// maps. Sample slot n covers [anchor + n*T, anchor + (n+1)*T).
struct PixelSlotSamples {
    frontend::RoiWindow rect;
    int n_slots = 0;
    std::vector<std::int8_t> v; // [(y*rect.width()+x) * n_slots + slot]

    std::int8_t at(int x, int y, int slot) const {
        return v[(size_t(y - rect.y0) * rect.width() + (x - rect.x0)) * n_slots + slot];
    }
};

// Fills per-pixel slot samples from sorted events (events outside the
// rectangle or the sampled time span are ignored).
PixelSlotSamples sample_pixels(const std::vector<Event>& events,
                               const frontend::RoiWindow& rect, double anchor_us,
                               double chip_period_us, int n_slots);

// Cell waveform: per slot, the majority vote over member pixels' last event
// polarities; 0 on a tie or when no pixel saw an event.
codes::Chips grid_waveform(const std::vector<Event>& events,
                           const frontend::RoiWindow& cell, double anchor_us,
                           double chip_period_us, int n_slots);

// Same vote over already-sampled pixels (cell clipped to the sample rect).
codes::Chips cell_waveform(const PixelSlotSamples& samples,
                           const frontend::RoiWindow& cell);

// Pair-level fold of a sampled chip sequence b (1-indexed): out_i = b_{2i}
// when that sample exists, else -b_{2i-1} for i > 1, else 0. Length must be
// even. Inverse of the transition channel for pairwise-inverting codewords.
codes::Chips reconstruct_pairs(const codes::Chips& b);

// One frame's presence weights for every cluster over the ROI grid.
struct PresenceMap {
    int frame_index = 0;
    std::int64_t t_us = 0;            // frame start
    frontend::RoiWindow roi;
    GridSpec grid;
    int cols = 0, rows = 0;
    std::vector<std::vector<float>> w; // [cluster][cell], cell = row*cols+col

    int n_cells() const { return cols * rows; }
    frontend::RoiWindow cell_rect(int cell) const; // pixel rect of a cell
};

// Builds the presence map from per-pixel slot samples covering one frame
// (pilot chips first). w = clamp(correlation / (pilot pairs), 0, 1).
PresenceMap presence_map(const PixelSlotSamples& samples, const GridSpec& grid,
                         const std::vector<codes::Codeword>& pilots, int pilot_len,
                         int frame_index, std::int64_t t_us);

struct TrackResult {
    int dx_cells = 0;
    int dy_cells = 0;
    int overlap = 0;    // matching above-threshold cells at the best shift
    bool lost = false;  // no overlap anywhere in the search range
};

// Integer cell shift aligning the previous frame's thresholded presence
// mask with the new one (max overlap; ties prefer the smallest shift).
TrackResult track_update(const PresenceMap& prev, const PresenceMap& next,
                         double threshold, int max_shift_cells);

// Plain-text PGM (P2, maxval 255) of one cluster's weights, or of the
// per-cell maximum over clusters when cluster < 0.
void write_presence_pgm(std::ostream& os, const PresenceMap& map, int cluster);

}  // namespace evlink::presence

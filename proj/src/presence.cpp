#include "evlink/presence.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace evlink::presence {

PixelSlotSamples sample_pixels(const std::vector<Event>& events,
                               const frontend::RoiWindow& rect, double anchor_us,
                               double chip_period_us, int n_slots) {
    if (rect.empty() || n_slots < 1 || chip_period_us <= 0.0)
        throw std::invalid_argument("sample_pixels: bad rectangle or slot layout");
    PixelSlotSamples s;
    s.rect = rect;
    s.n_slots = n_slots;
    s.v.assign(size_t(rect.width()) * rect.height() * n_slots, 0);
    const double end_us = anchor_us + double(n_slots) * chip_period_us;
    for (const Event& e : events) {
        if (!rect.contains(e.x, e.y)) continue;
        const double t = double(e.t_us);
        if (t < anchor_us || t >= end_us) continue;
        const int slot = static_cast<int>((t - anchor_us) / chip_period_us);
        if (slot < 0 || slot >= n_slots) continue;
        // Events arrive sorted, so plain overwrite keeps the last polarity.
        s.v[(size_t(e.y - rect.y0) * rect.width() + (e.x - rect.x0)) * n_slots + slot] =
            e.p;
    }
    return s;
}

codes::Chips cell_waveform(const PixelSlotSamples& s, const frontend::RoiWindow& cell) {
    codes::Chips b(s.n_slots, 0);
    const int x0 = std::max(cell.x0, s.rect.x0);
    const int x1 = std::min(cell.x1, s.rect.x1);
    const int y0 = std::max(cell.y0, s.rect.y0);
    const int y1 = std::min(cell.y1, s.rect.y1);
    for (int slot = 0; slot < s.n_slots; ++slot) {
        int vote = 0;
        for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) vote += s.at(x, y, slot);
        b[slot] = vote > 0 ? std::int8_t{1} : vote < 0 ? std::int8_t{-1} : std::int8_t{0};
    }
    return b;
}

codes::Chips grid_waveform(const std::vector<Event>& events,
                           const frontend::RoiWindow& cell, double anchor_us,
                           double chip_period_us, int n_slots) {
    const PixelSlotSamples s =
        sample_pixels(events, cell, anchor_us, chip_period_us, n_slots);
    return cell_waveform(s, cell);
}

codes::Chips reconstruct_pairs(const codes::Chips& b) {
    if (b.size() % 2 != 0)
        throw std::invalid_argument("reconstruct_pairs: length must be even");
    codes::Chips out(b.size() / 2, 0);
    for (size_t i = 0; i < out.size(); ++i) {
        const std::int8_t even = b[2 * i + 1]; // 1-indexed b_{2i}
        if (even != 0)
            out[i] = even;
        else if (i > 0 && b[2 * i] != 0)       // 1-indexed -b_{2i-1}, only for i > 1
            out[i] = static_cast<std::int8_t>(-b[2 * i]);
    }
    return out;
}

frontend::RoiWindow PresenceMap::cell_rect(int cell) const {
    const int col = cell % cols, row = cell / cols;
    frontend::RoiWindow r;
    r.x0 = roi.x0 + col * grid.cell_w;
    r.y0 = roi.y0 + row * grid.cell_h;
    r.x1 = std::min(roi.x1, r.x0 + grid.cell_w);
    r.y1 = std::min(roi.y1, r.y0 + grid.cell_h);
    return r;
}

PresenceMap presence_map(const PixelSlotSamples& samples, const GridSpec& grid,
                         const std::vector<codes::Codeword>& pilots, int pilot_len,
                         int frame_index, std::int64_t t_us) {
    if (grid.cell_w < 1 || grid.cell_h < 1)
        throw std::invalid_argument("presence_map: bad grid spec");
    if (samples.n_slots < pilot_len)
        throw std::invalid_argument("presence_map: fewer slots than pilot chips");
    PresenceMap map;
    map.frame_index = frame_index;
    map.t_us = t_us;
    map.roi = samples.rect;
    map.grid = grid;
    map.cols = (samples.rect.width() + grid.cell_w - 1) / grid.cell_w;
    map.rows = (samples.rect.height() + grid.cell_h - 1) / grid.cell_h;

    std::vector<codes::Chips> sigs;
    sigs.reserve(pilots.size());
    for (const auto& p : pilots) sigs.push_back(codes::pair_signature(p));
    const double norm = pilot_len / 2.0;

    map.w.assign(pilots.size(), std::vector<float>(map.n_cells(), 0.0f));
    codes::Chips pilot_chips(pilot_len);
    for (int cell = 0; cell < map.n_cells(); ++cell) {
        const codes::Chips b = cell_waveform(samples, map.cell_rect(cell));
        std::copy(b.begin(), b.begin() + pilot_len, pilot_chips.begin());
        const codes::Chips pairs = reconstruct_pairs(pilot_chips);
        for (size_t k = 0; k < sigs.size(); ++k) {
            const double score = double(codes::cross_correlate(pairs, sigs[k])) / norm;
            map.w[k][cell] = static_cast<float>(std::clamp(score, 0.0, 1.0));
        }
    }
    return map;
}

namespace {

std::vector<std::uint8_t> threshold_mask(const PresenceMap& m, double threshold) {
    std::vector<std::uint8_t> mask(m.n_cells(), 0);
    for (const auto& wk : m.w)
        for (int c = 0; c < m.n_cells(); ++c)
            if (wk[c] >= threshold) mask[c] = 1;
    return mask;
}

}  // namespace

TrackResult track_update(const PresenceMap& prev, const PresenceMap& next,
                         double threshold, int max_shift_cells) {
    if (max_shift_cells < 0)
        throw std::invalid_argument("track_update: negative shift range");
    const auto a = threshold_mask(prev, threshold);
    const auto b = threshold_mask(next, threshold);
    TrackResult best;
    best.overlap = -1;
    for (int dy = -max_shift_cells; dy <= max_shift_cells; ++dy) {
        for (int dx = -max_shift_cells; dx <= max_shift_cells; ++dx) {
            int overlap = 0;
            for (int row = 0; row < prev.rows; ++row) {
                const int nrow = row + dy;
                if (nrow < 0 || nrow >= next.rows) continue;
                for (int col = 0; col < prev.cols; ++col) {
                    const int ncol = col + dx;
                    if (ncol < 0 || ncol >= next.cols) continue;
                    if (a[row * prev.cols + col] && b[nrow * next.cols + ncol]) ++overlap;
                }
            }
            const bool better =
                overlap > best.overlap ||
                (overlap == best.overlap &&
                 (std::abs(dx) + std::abs(dy) < std::abs(best.dx_cells) + std::abs(best.dy_cells) ||
                  (std::abs(dx) + std::abs(dy) ==
                       std::abs(best.dx_cells) + std::abs(best.dy_cells) &&
                   (dy < best.dy_cells || (dy == best.dy_cells && dx < best.dx_cells)))));
            if (better) {
                best.overlap = overlap;
                best.dx_cells = dx;
                best.dy_cells = dy;
            }
        }
    }
    best.lost = best.overlap <= 0;
    return best;
}

void write_presence_pgm(std::ostream& os, const PresenceMap& map, int cluster) {
    if (cluster >= static_cast<int>(map.w.size()))
        throw std::invalid_argument("write_presence_pgm: no such cluster");
    os << "P2\n" << map.cols << ' ' << map.rows << "\n255\n";
    for (int row = 0; row < map.rows; ++row) {
        for (int col = 0; col < map.cols; ++col) {
            float v = 0.0f;
            const int cell = row * map.cols + col;
            if (cluster >= 0) {
                v = map.w[cluster][cell];
            } else {
                for (const auto& wk : map.w) v = std::max(v, wk[cell]);
            }
            os << std::min(255, std::max(0, int(std::lround(v * 255.0f))));
            os << (col + 1 == map.cols ? '\n' : ' ');
        }
    }
}

}  // namespace evlink::presence

#include "evlink/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

#include "evlink/vlc.hpp"

namespace evlink::pipeline {

namespace {

// Per-frame, per-cluster cell selection: the strongest cell anchors the
// cluster; above-threshold cells reachable from it (they must fit a
// poc_window centred nearby) are kept for ranging.
struct ClusterView {
    bool present = false;
    std::vector<int> kept_cells;
    frontend::RoiWindow pixel_bbox; // union of kept cell rectangles
};

ClusterView select_cells(const presence::PresenceMap& map, int cluster,
                         double threshold, int reach_px) {
    ClusterView view;
    const std::vector<float>& w = map.w[cluster];
    int anchor = -1;
    for (int cell = 0; cell < map.n_cells(); ++cell)
        if (anchor < 0 || w[cell] > w[anchor]) anchor = cell;
    if (anchor < 0 || w[anchor] < threshold) return view;
    view.present = true;

    const frontend::RoiWindow arect = map.cell_rect(anchor);
    const double ax = 0.5 * (arect.x0 + arect.x1);
    const double ay = 0.5 * (arect.y0 + arect.y1);
    for (int cell = 0; cell < map.n_cells(); ++cell) {
        if (w[cell] < threshold) continue;
        const frontend::RoiWindow r = map.cell_rect(cell);
        if (std::abs(0.5 * (r.x0 + r.x1) - ax) > reach_px ||
            std::abs(0.5 * (r.y0 + r.y1) - ay) > reach_px)
            continue; // stray cell too far to share the cluster's window
        view.kept_cells.push_back(cell);
        if (view.pixel_bbox.empty()) {
            view.pixel_bbox = r;
        } else {
            view.pixel_bbox.x0 = std::min(view.pixel_bbox.x0, r.x0);
            view.pixel_bbox.y0 = std::min(view.pixel_bbox.y0, r.y0);
            view.pixel_bbox.x1 = std::max(view.pixel_bbox.x1, r.x1);
            view.pixel_bbox.y1 = std::max(view.pixel_bbox.y1, r.y1);
        }
    }
    return view;
}

// Pixel-level pilot-correlation window for one cluster. Returns false when
// no pixel carries any correlation (cluster unrangeable this frame).
bool build_pixel_map(const presence::PixelSlotSamples& samples,
                     const presence::PresenceMap& map, const ClusterView& view,
                     const codes::Chips& pilot_sig, int pilot_len, int window,
                     const sim::CameraModel& cam, vlp::PixelProbMap& out) {
    const frontend::RoiWindow& bbox = view.pixel_bbox;
    const double cx = 0.5 * (bbox.x0 + bbox.x1);
    const double cy = 0.5 * (bbox.y0 + bbox.y1);
    out.w = out.h = window;
    out.origin_x = std::clamp(static_cast<int>(std::lround(cx)) - window / 2, 0,
                              cam.width - window);
    out.origin_y = std::clamp(static_cast<int>(std::lround(cy)) - window / 2, 0,
                              cam.height - window);
    out.v.assign(size_t(window) * window, 0.0);

    const double norm = pilot_len / 2.0;
    codes::Chips pilot_chips(pilot_len);
    double total = 0.0;
    for (const int cell : view.kept_cells) {
        const frontend::RoiWindow r = map.cell_rect(cell);
        for (int y = std::max(r.y0, samples.rect.y0);
             y < std::min(r.y1, samples.rect.y1); ++y) {
            for (int x = std::max(r.x0, samples.rect.x0);
                 x < std::min(r.x1, samples.rect.x1); ++x) {
                const int wx = x - out.origin_x, wy = y - out.origin_y;
                if (wx < 0 || wx >= window || wy < 0 || wy >= window) continue;
                for (int slot = 0; slot < pilot_len; ++slot)
                    pilot_chips[slot] = samples.at(x, y, slot);
                const codes::Chips pairs = presence::reconstruct_pairs(pilot_chips);
                const double corr =
                    double(codes::cross_correlate(pairs, pilot_sig)) / norm;
                const double v = std::clamp(corr, 0.0, 1.0);
                out.at(wx, wy) = v;
                total += v;
            }
        }
    }
    return total > 0.0;
}

}  // namespace

int ReceiveResult::frames_ranged() const {
    int n = 0;
    for (const FrameRecord& f : frames) n += f.ranged() ? 1 : 0;
    return n;
}

ReceiveResult receive(const std::vector<Event>& events, const ReceiverParams& p) {
    if (events.empty())
        throw std::invalid_argument("receive: empty event stream");
    if (!events_sorted(events))
        throw std::invalid_argument("receive: events must be time-sorted");
    if (p.poc_window < 8 || (p.poc_window & (p.poc_window - 1)) != 0)
        throw std::invalid_argument("receive: poc_window must be a power of two >= 8");
    if (p.poc_window > p.camera.width || p.poc_window > p.camera.height)
        throw std::invalid_argument("receive: poc_window exceeds the sensor");
    const int n_clusters = p.tx.n_clusters;
    for (const int k : p.excluded_clusters)
        if (k < 0 || k >= n_clusters)
            throw std::invalid_argument("receive: excluded cluster out of range");
    if (p.single_pair.first == p.single_pair.second ||
        p.single_pair.first < 0 || p.single_pair.first >= n_clusters ||
        p.single_pair.second < 0 || p.single_pair.second >= n_clusters)
        throw std::invalid_argument("receive: bad single_pair");

    const double T = p.tx.chip_period_us();
    const int frame_chips = p.tx.frame_chips();
    const double frame_us = frame_chips * T;
    const int pilot_pairs = p.tx.pilot_len / 2;

    ReceiveResult out;
    out.n_events = events.size();

    // Stage 1: find the blinking pixels in the stream prefix.
    const double prefix_end = double(events.front().t_us) + p.locate_prefix_s * 1e6;
    std::vector<Event> prefix;
    for (const Event& e : events) {
        if (double(e.t_us) > prefix_end) break;
        prefix.push_back(e);
    }
    const frontend::FilterResult located =
        frontend::frequency_filter(prefix, p.filter_window_s, p.filter_min_rate_hz);
    if (located.bbox.empty() || located.events.empty())
        throw frontend::SyncFailed("receive: no pixel passes the rate filter");
    out.n_events_filtered = located.events.size();
    out.initial_roi =
        located.bbox.expanded(p.roi_margin_px, p.camera.width, p.camera.height);

    // Stage 2: chip clock from the preamble; the true start can only lie
    // within a preamble length of the first filtered event.
    const double preamble_us = double(p.tx.preamble.size()) * T;
    frontend::SyncParams sp;
    sp.search_lo_us = double(located.events.front().t_us) - preamble_us - T;
    sp.search_hi_us = double(located.events.front().t_us) + preamble_us + frame_us;
    sp.psr_threshold = p.psr_threshold;
    out.sync =
        frontend::barker_sync(located.events, p.tx.preamble, p.tx.blink_rate_hz, sp);

    // Frames are sampled half a chip early so nominal transition instants
    // sit mid-slot: the sync estimate may be off by up to a quarter chip
    // without shifting any event into a neighbouring slot.
    const double t0 = out.sync.t0_us;
    const double sample_base = t0 - 0.5 * T;
    // A frame counts as captured when the stream reaches its last chip slot:
    // transitions are stamped at chip starts, so the final slot of a frame
    // can never hold an event later than one chip period before the window
    // closes. Requiring events past the window end would always drop the
    // last transmitted frame.
    const std::int64_t t_last = events.back().t_us;
    const int n_frames = std::max(
        0,
        static_cast<int>(std::floor((double(t_last) + T - sample_base) / frame_us)));

    std::vector<codes::Chips> pilot_sigs;
    pilot_sigs.reserve(p.tx.pilots.size());
    for (const codes::Codeword& cw : p.tx.pilots)
        pilot_sigs.push_back(codes::pair_signature(cw));

    const int reach_px = p.poc_window / 2 - std::max(p.grid.cell_w, p.grid.cell_h);

    frontend::RoiWindow roi = out.initial_roi;
    presence::PresenceMap prev_map;
    bool have_prev = false;
    std::size_t idx = 0;
    std::vector<vlp::PixelProbMap> maps(n_clusters);
    std::vector<std::vector<std::complex<double>>> spectra(n_clusters);

    for (int f = 0; f < n_frames; ++f) {
        const double a_lo = sample_base + f * frame_us;
        const double a_hi = a_lo + frame_us;
        while (idx < events.size() && double(events[idx].t_us) < a_lo) ++idx;
        std::size_t jend = idx;
        while (jend < events.size() && double(events[jend].t_us) < a_hi) ++jend;
        const std::vector<Event> slice(events.begin() + idx, events.begin() + jend);
        idx = jend;

        FrameRecord fr;
        fr.frame_index = f;
        fr.t_us = std::llround(t0 + f * frame_us);
        fr.roi = roi;
        fr.distance_m = std::numeric_limits<double>::quiet_NaN();

        const presence::PixelSlotSamples samples =
            presence::sample_pixels(slice, roi, a_lo, T, frame_chips);
        const presence::PresenceMap map = presence::presence_map(
            samples, p.grid, p.tx.pilots, p.tx.pilot_len, f, fr.t_us);

        fr.presence.assign(n_clusters, 0.0f);
        for (int k = 0; k < n_clusters; ++k)
            for (const float w : map.w[k]) fr.presence[k] = std::max(fr.presence[k], w);

        std::vector<ClusterView> views(n_clusters);
        frontend::RoiWindow union_bbox;
        std::vector<char> cell_used(map.n_cells(), 0);
        for (int k = 0; k < n_clusters; ++k) {
            views[k] = select_cells(map, k, p.presence_threshold, reach_px);
            if (!views[k].present) continue;
            for (int cell = 0; cell < map.n_cells(); ++cell)
                if (map.w[k][cell] >= p.presence_threshold) cell_used[cell] = 1;
            const frontend::RoiWindow& b = views[k].pixel_bbox;
            if (b.empty()) continue;
            if (union_bbox.empty()) {
                union_bbox = b;
            } else {
                union_bbox.x0 = std::min(union_bbox.x0, b.x0);
                union_bbox.y0 = std::min(union_bbox.y0, b.y0);
                union_bbox.x1 = std::max(union_bbox.x1, b.x1);
                union_bbox.y1 = std::max(union_bbox.y1, b.y1);
            }
        }

        if (union_bbox.empty()) {
            fr.tracking_lost = true;
            out.tracking_lost = true;
            out.frames.push_back(std::move(fr));
            break;
        }

        // Info segments for every cell some cluster selected: reconstruct
        // the whole frame waveform at pair level, then keep the info half.
        std::vector<codes::Chips> segments(map.n_cells());
        for (int cell = 0; cell < map.n_cells(); ++cell) {
            if (!cell_used[cell]) continue;
            const codes::Chips b = presence::cell_waveform(samples, map.cell_rect(cell));
            const codes::Chips pairs = presence::reconstruct_pairs(b);
            segments[cell].assign(pairs.begin() + pilot_pairs, pairs.end());
        }

        fr.symbols.assign(n_clusters, -1);
        for (int k = 0; k < n_clusters; ++k) {
            if (!views[k].present) continue;
            const vlc::IntegratedInfo integ =
                vlc::integrate_info(map, k, segments, p.presence_threshold);
            if (integ.n_cells == 0) continue;
            const vlc::DecodedFrame dec = vlc::decode_frame(integ.value, p.tx.info_book);
            if (!dec.failed) fr.symbols[k] = dec.symbol;
        }

        // Pixel-probability windows + cached spectra for rangeable clusters.
        std::vector<int> rangeable;
        for (int k = 0; k < n_clusters; ++k) {
            const bool eligible =
                p.single_pair_mode
                    ? (k == p.single_pair.first || k == p.single_pair.second)
                    : std::find(p.excluded_clusters.begin(), p.excluded_clusters.end(),
                                k) == p.excluded_clusters.end();
            if (!eligible || !views[k].present) continue;
            if (!build_pixel_map(samples, map, views[k], pilot_sigs[k], p.tx.pilot_len,
                                 p.poc_window, p.camera, maps[k]))
                continue;
            spectra[k] = vlp::poc_spectrum(maps[k]);
            rangeable.push_back(k);
        }

        for (std::size_t a = 0; a < rangeable.size(); ++a) {
            for (std::size_t b = a + 1; b < rangeable.size(); ++b) {
                const int i = rangeable[a], j = rangeable[b];
                if (!p.single_pair_mode &&
                    p.layout.baseline_m(i, j) < p.min_baseline_m)
                    continue;
                const vlp::CorrelationSurface surf = vlp::poc_from_spectra(
                    spectra[i], spectra[j], p.poc_window, p.poc_window);
                const vlp::SubpixelPeak pk = vlp::subpixel_peak(surf);
                const double dx = double(maps[j].origin_x - maps[i].origin_x) + pk.dx;
                const double dy = double(maps[j].origin_y - maps[i].origin_y) + pk.dy;
                const double l_px = std::hypot(dx, dy);
                if (l_px <= 0.0) continue;
                vlp::RangeEstimate re;
                re.baseline_m = p.layout.baseline_m(i, j);
                re.l_px = l_px;
                re.distance_m = vlp::triangulate(l_px, re.baseline_m, p.camera);
                re.cluster_i = i;
                re.cluster_j = j;
                fr.ranges.push_back(re);
            }
        }

        fr.n_pairs = static_cast<int>(fr.ranges.size());
        if (fr.ranges.size() >= 3) {
            const vlp::AggregateResult ag = vlp::aggregate(fr.ranges);
            fr.distance_m = ag.distance_m;
            fr.degraded = ag.degraded;
        } else if (!fr.ranges.empty()) {
            std::vector<double> d;
            for (const vlp::RangeEstimate& re : fr.ranges) d.push_back(re.distance_m);
            fr.distance_m = vlp::median_distance(std::move(d));
            fr.degraded = true;
        }

        if (have_prev && prev_map.cols == map.cols && prev_map.rows == map.rows) {
            const presence::TrackResult tr = presence::track_update(
                prev_map, map, p.presence_threshold, p.track_max_shift_cells);
            fr.track_dx_cells = tr.dx_cells;
            fr.track_dy_cells = tr.dy_cells;
        }
        prev_map = map;
        have_prev = true;

        roi = union_bbox.expanded(p.roi_margin_px, p.camera.width, p.camera.height);
        out.frames.push_back(std::move(fr));
    }

    const int ranged = out.frames_ranged();
    if (!out.frames.empty() && ranged > 0) {
        const double span_s =
            (double(out.frames.back().t_us - out.frames.front().t_us) + frame_us) * 1e-6;
        if (span_s > 0.0) out.realized_update_rate_hz = ranged / span_s;
    }
    return out;
}

}  // namespace evlink::pipeline

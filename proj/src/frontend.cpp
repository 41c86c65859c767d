#include "evlink/frontend.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace evlink::frontend {

RoiWindow RoiWindow::expanded(int margin, int sensor_w, int sensor_h) const {
    RoiWindow r;
    r.x0 = std::max(0, x0 - margin);
    r.y0 = std::max(0, y0 - margin);
    r.x1 = std::min(sensor_w, x1 + margin);
    r.y1 = std::min(sensor_h, y1 + margin);
    return r;
}

FilterResult frequency_filter(const std::vector<Event>& events, double window_s,
                              double min_rate_hz) {
    if (window_s <= 0.0 || min_rate_hz <= 0.0)
        throw std::invalid_argument("frequency_filter: window and rate must be positive");
    if (!events_sorted(events))
        throw std::invalid_argument("frequency_filter: events must be sorted");

    const double window_us = window_s * 1e6;
    const std::uint64_t threshold =
        static_cast<std::uint64_t>(std::ceil(min_rate_hz * window_s - 1e-9));

    // Pass 1: total per-pixel counts; only pixels with enough events overall
    // can satisfy any window.
    std::unordered_map<std::uint32_t, std::uint32_t> totals;
    totals.reserve(1024);
    for (const Event& e : events)
        ++totals[(std::uint32_t(e.y) << 16) | e.x];

    std::unordered_map<std::uint32_t, std::vector<std::int64_t>> times;
    for (const Event& e : events) {
        const std::uint32_t key = (std::uint32_t(e.y) << 16) | e.x;
        if (totals[key] >= threshold) times[key].push_back(e.t_us);
    }

    FilterResult out;
    for (auto& [key, ts] : times) {
        // ts is time-ordered (events are globally sorted). Two-pointer scan
        // for the densest window.
        bool pass = false;
        size_t lo = 0;
        for (size_t hi = 0; hi < ts.size(); ++hi) {
            while (double(ts[hi] - ts[lo]) >= window_us) ++lo;
            if (hi - lo + 1 >= threshold) {
                pass = true;
                break;
            }
        }
        if (pass) out.mask.push_back(key);
    }
    std::sort(out.mask.begin(), out.mask.end());

    RoiWindow box{1 << 16, 1 << 16, 0, 0};
    for (const std::uint32_t key : out.mask) {
        const int x = int(key & 0xffff), y = int(key >> 16);
        box.x0 = std::min(box.x0, x);
        box.y0 = std::min(box.y0, y);
        box.x1 = std::max(box.x1, x + 1);
        box.y1 = std::max(box.y1, y + 1);
    }
    out.bbox = out.mask.empty() ? RoiWindow{} : box;

    out.events.reserve(events.size() / 4);
    for (const Event& e : events) {
        const std::uint32_t key = (std::uint32_t(e.y) << 16) | e.x;
        if (std::binary_search(out.mask.begin(), out.mask.end(), key))
            out.events.push_back(e);
    }
    return out;
}

std::vector<Event> apply_roi(const std::vector<Event>& events, const RoiWindow& roi) {
    std::vector<Event> out;
    for (const Event& e : events)
        if (roi.contains(e.x, e.y)) out.push_back(e);
    return out;
}

SyncResult barker_sync(const std::vector<Event>& events, const codes::Chips& preamble,
                       double blink_rate_hz, const SyncParams& params) {
    if (blink_rate_hz <= 0.0)
        throw std::invalid_argument("barker_sync: blink rate must be positive");
    if (params.search_hi_us < params.search_lo_us || params.step_divisor < 1)
        throw std::invalid_argument("barker_sync: bad search window");
    if (!events_sorted(events))
        throw std::invalid_argument("barker_sync: events must be sorted");
    if (events.empty()) throw SyncFailed("barker_sync: no events");

    const double T_us = 1e6 / blink_rate_hz;
    const double step_us = T_us / params.step_divisor;
    const codes::Chips sig = codes::transition_signature(preamble, -1);

    // Prefix polarity sums over the sorted events let each slot sum come
    // from two binary searches.
    std::vector<std::int64_t> t(events.size());
    std::vector<long> psum(events.size() + 1, 0);
    for (size_t i = 0; i < events.size(); ++i) {
        t[i] = events[i].t_us;
        psum[i + 1] = psum[i] + events[i].p;
    }
    auto polarity_sum = [&](double lo, double hi) -> long {
        const auto a = std::lower_bound(t.begin(), t.end(),
                                        static_cast<std::int64_t>(std::ceil(lo))) -
                       t.begin();
        const auto b = std::lower_bound(t.begin(), t.end(),
                                        static_cast<std::int64_t>(std::ceil(hi))) -
                       t.begin();
        return psum[b] - psum[a];
    };

    const int n_steps =
        static_cast<int>(std::floor((params.search_hi_us - params.search_lo_us) / step_us)) + 1;
    std::vector<double> score(n_steps, 0.0);
    for (int s = 0; s < n_steps; ++s) {
        const double tau = params.search_lo_us + s * step_us;
        double acc = 0.0;
        for (size_t j = 0; j < sig.size(); ++j) {
            if (sig[j] == 0) continue;
            acc += double(sig[j]) * double(polarity_sum(tau + j * T_us, tau + (j + 1) * T_us));
        }
        score[s] = acc;
    }

    int best = 0;
    for (int s = 1; s < n_steps; ++s)
        if (score[s] > score[best]) best = s;
    if (!(score[best] > 0.0)) throw SyncFailed("barker_sync: no positive correlation peak");

    // The noiseless maximum is a plateau about one chip wide; its midpoint
    // plus half a chip is the best estimate of the true preamble start.
    int lo = best, hi = best;
    while (lo > 0 && score[lo - 1] == score[best]) --lo;
    while (hi + 1 < n_steps && score[hi + 1] == score[best]) ++hi;
    const double tau_mid = params.search_lo_us + 0.5 * (lo + hi) * step_us;
    const double offset = tau_mid + 0.5 * T_us;

    double sidelobe = 0.0;
    for (int s = 0; s < n_steps; ++s) {
        const double tau = params.search_lo_us + s * step_us;
        if (std::abs(tau - tau_mid) < T_us) continue;
        sidelobe = std::max(sidelobe, std::abs(score[s]));
    }
    SyncResult r;
    r.offset_us = offset;
    r.t0_us = offset + double(preamble.size()) * T_us;
    r.peak = score[best];
    r.psr = sidelobe > 0.0 ? score[best] / sidelobe
                           : std::numeric_limits<double>::infinity();
    if (r.psr < params.psr_threshold)
        throw SyncFailed("barker_sync: peak-to-sidelobe ratio " + std::to_string(r.psr) +
                         " below threshold");
    return r;
}

}  // namespace evlink::frontend

#include "evlink/sim.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "evlink/rng.hpp"

namespace evlink::sim {

std::array<double, 2> project_point(const CameraModel& cam, double x_m, double y_m,
                                    double z_m) {
    if (!(z_m > 0.0))
        throw std::invalid_argument("project_point: point must be in front of the camera");
    const double s = cam.focal_m / (z_m * cam.pixel_pitch_m);
    return {cam.cx + s * x_m, cam.cy + s * y_m};
}

double Trajectory::duration_s() const {
    if (speed_mps <= 0.0) return std::numeric_limits<double>::infinity();
    return std::abs(end_m - start_m) / speed_mps;
}

double Trajectory::longitudinal_m(double t_s) const {
    const double dir = end_m >= start_m ? 1.0 : -1.0;
    return start_m + dir * speed_mps * t_s;
}

double Trajectory::vibration_px(double t_s) const {
    if (vibration_amp_px == 0.0) return 0.0;
    return vibration_amp_px * std::sin(2.0 * M_PI * vibration_freq_hz * t_s);
}

double ground_truth_distance(const Trajectory& traj, const LedBarLayout& layout,
                             double t_s) {
    constexpr double kEps = 1e-6;
    if (t_s < -kEps || t_s > traj.duration_s() + kEps)
        throw std::out_of_range("ground_truth_distance: t outside the trajectory");
    const double z = traj.longitudinal_m(t_s);
    const double yc = layout.bar_center_y_m();
    return std::sqrt(z * z + traj.lateral_m * traj.lateral_m + yc * yc);
}

namespace {

struct PixelDelta {
    std::uint32_t key = 0; // (y << 16) | x, sorts in (y, x) order
    double net = 0.0;
};

}  // namespace

SimResult simulate_events(const SimConfig& cfg, const tx::Session& session) {
    const tx::TxConfig& txc = session.config;
    const LedBarLayout& bar = cfg.layout;
    if (bar.n_clusters() != txc.n_clusters || bar.leds_per_cluster != txc.leds_per_cluster)
        throw std::invalid_argument("simulate_events: LED bar layout does not match the session");
    if (cfg.footprint_px < 1 || cfg.footprint_px % 2 == 0)
        throw std::invalid_argument("simulate_events: footprint must be an odd pixel count");
    const double T_us = txc.chip_period_us();
    if (cfg.noise.jitter_us < 0.0 || cfg.noise.jitter_us >= 0.5 * T_us)
        throw std::invalid_argument("simulate_events: jitter must be below half a chip period");
    if (cfg.noise.miss_prob < 0.0 || cfg.noise.miss_prob > 1.0)
        throw std::invalid_argument("simulate_events: miss_prob must be in [0,1]");

    const int n_chips = session.chips_per_cluster();
    const double duration_s = n_chips * T_us * 1e-6;
    if (duration_s > cfg.trajectory.duration_s() + 1e-9)
        throw std::invalid_argument("simulate_events: trajectory shorter than the session");

    SimResult out;
    std::vector<std::mt19937_64> led_rng;
    led_rng.reserve(bar.n_leds);
    for (int l = 0; l < bar.n_leds; ++l)
        led_rng.emplace_back(derive_seed(cfg.seed, 0x1ed00000ull + l));
    std::mt19937_64 jitter_rng(derive_seed(cfg.seed, 0x00717712ull));
    std::mt19937_64 spurious_rng(derive_seed(cfg.seed, 0x000b1a5eull));

    const int fp = cfg.footprint_px / 2;
    const double x_m = -cfg.trajectory.lateral_m;
    std::vector<PixelDelta> deltas;
    deltas.reserve(static_cast<size_t>(bar.n_leds) * cfg.footprint_px * cfg.footprint_px);

    // Signal: walk chip boundaries, superpose per-pixel luminance deltas.
    for (int j = 0; j < n_chips; ++j) {
        const double t_us = session.boundary_us(j);
        const double t_s = t_us * 1e-6;
        const double z = cfg.trajectory.longitudinal_m(t_s);
        if (!(z > 0.0))
            throw std::invalid_argument("simulate_events: bar behind the camera");
        const double scale = cfg.camera.focal_m / (z * cfg.camera.pixel_pitch_m);
        const double u = cfg.camera.cx + scale * x_m;
        const double vib = cfg.trajectory.vibration_px(t_s);
        const int ix0 = static_cast<int>(std::lround(u));

        deltas.clear();
        for (int l = 0; l < bar.n_leds; ++l) {
            const int k = bar.cluster_of(l);
            const codes::Chips& chips = session.streams[k].chips;
            const std::int8_t prev = j == 0 ? std::int8_t{-1} : chips[j - 1];
            const std::int8_t cur = chips[j];
            if (cur == prev) continue;
            const int d = cur > prev ? 1 : -1;
            const double v = cfg.camera.cy + scale * bar.led_y_m(l) + vib;
            const int iy0 = static_cast<int>(std::lround(v));
            for (int dy = -fp; dy <= fp; ++dy) {
                for (int dx = -fp; dx <= fp; ++dx) {
                    const int px = ix0 + dx;
                    const int py = iy0 + dy;
                    if (px < 0 || px >= cfg.camera.width || py < 0 || py >= cfg.camera.height)
                        continue;
                    // Tent luminance profile around the continuous center, so
                    // contributions of overlapping LEDs differ by proximity
                    // and their superposition keeps a definite sign. A single
                    // 1 px footprint stays a binary nearest-pixel hit.
                    double weight = 1.0;
                    if (cfg.footprint_px > 1) {
                        const double r = cfg.footprint_px / 2.0;
                        weight = std::max(0.0, 1.0 - std::abs(px - u) / r) *
                                 std::max(0.0, 1.0 - std::abs(py - v) / r);
                        if (weight <= 0.0) continue;
                    }
                    if (cfg.noise.miss_prob > 0.0 &&
                        bernoulli(led_rng[l], cfg.noise.miss_prob)) {
                        ++out.stats.n_missed;
                        continue;
                    }
                    deltas.push_back(PixelDelta{
                        (static_cast<std::uint32_t>(py) << 16) | static_cast<std::uint32_t>(px),
                        d * weight});
                }
            }
        }
        if (deltas.empty()) continue;
        std::sort(deltas.begin(), deltas.end(),
                  [](const PixelDelta& a, const PixelDelta& b) { return a.key < b.key; });
        size_t i = 0;
        while (i < deltas.size()) {
            std::uint32_t key = deltas[i].key;
            double net = 0.0;
            while (i < deltas.size() && deltas[i].key == key) net += deltas[i++].net;
            // Below the contrast threshold nothing fires; opposing
            // transitions of equal strength cancel on this pixel.
            if (std::abs(net) <= cfg.contrast_threshold) continue;
            double t = t_us;
            if (cfg.noise.jitter_us > 0.0)
                t += uniform(jitter_rng, -cfg.noise.jitter_us, cfg.noise.jitter_us);
            Event e;
            e.t_us = std::max<std::int64_t>(0, std::llround(t));
            e.x = static_cast<std::uint16_t>(key & 0xffff);
            e.y = static_cast<std::uint16_t>(key >> 16);
            e.p = net > 0 ? 1 : -1;
            out.events.push_back(e);
            ++out.stats.n_signal;
        }
    }

    // Spurious noise: Poisson-sprinkled over the projected bar's bounding
    // box (plus margin), one batch per frame-sized window.
    if (cfg.noise.spurious_rate > 0.0) {
        const double window_us = txc.frame_chips() * T_us;
        const double total_us = n_chips * T_us;
        const double p_neg = cfg.noise.neg_bias / (1.0 + cfg.noise.neg_bias);
        for (double w0 = 0.0; w0 < total_us; w0 += window_us) {
            const double w1 = std::min(w0 + window_us, total_us);
            int lo_x = cfg.camera.width, hi_x = -1, lo_y = cfg.camera.height, hi_y = -1;
            for (const double t_s : {w0 * 1e-6, w1 * 1e-6}) {
                const double z = cfg.trajectory.longitudinal_m(t_s);
                const double scale = cfg.camera.focal_m / (z * cfg.camera.pixel_pitch_m);
                const int ix = static_cast<int>(std::lround(cfg.camera.cx + scale * x_m));
                const double vib = cfg.trajectory.vibration_px(t_s);
                for (const int l : {0, bar.n_leds - 1}) {
                    const int iy = static_cast<int>(
                        std::lround(cfg.camera.cy + scale * bar.led_y_m(l) + vib));
                    lo_x = std::min(lo_x, ix);
                    hi_x = std::max(hi_x, ix);
                    lo_y = std::min(lo_y, iy);
                    hi_y = std::max(hi_y, iy);
                }
            }
            lo_x = std::max(0, lo_x - cfg.noise.spurious_margin_px);
            lo_y = std::max(0, lo_y - cfg.noise.spurious_margin_px);
            hi_x = std::min(cfg.camera.width - 1, hi_x + cfg.noise.spurious_margin_px);
            hi_y = std::min(cfg.camera.height - 1, hi_y + cfg.noise.spurious_margin_px);
            if (hi_x < lo_x || hi_y < lo_y) continue;
            const std::uint64_t area =
                std::uint64_t(hi_x - lo_x + 1) * std::uint64_t(hi_y - lo_y + 1);
            const double lam = cfg.noise.spurious_rate * double(area) * (w1 - w0) * 1e-6;
            const std::uint64_t n = poisson(spurious_rng, lam);
            for (std::uint64_t s = 0; s < n; ++s) {
                Event e;
                e.t_us = std::llround(uniform(spurious_rng, w0, w1));
                e.x = static_cast<std::uint16_t>(
                    lo_x + uniform_index(spurious_rng, std::uint64_t(hi_x - lo_x + 1)));
                e.y = static_cast<std::uint16_t>(
                    lo_y + uniform_index(spurious_rng, std::uint64_t(hi_y - lo_y + 1)));
                e.p = bernoulli(spurious_rng, p_neg) ? -1 : 1;
                out.events.push_back(e);
                ++out.stats.n_spurious;
            }
        }
    }

    sort_events(out.events);

    if (cfg.noise.refractory_us > 0.0) {
        std::vector<std::int64_t> last(static_cast<size_t>(cfg.camera.width) * cfg.camera.height,
                                       std::numeric_limits<std::int64_t>::min());
        const auto ref = static_cast<std::int64_t>(cfg.noise.refractory_us);
        size_t kept = 0;
        for (const Event& e : out.events) {
            const size_t idx = size_t(e.y) * cfg.camera.width + e.x;
            if (last[idx] != std::numeric_limits<std::int64_t>::min() &&
                e.t_us - last[idx] < ref) {
                ++out.stats.n_suppressed;
                continue;
            }
            last[idx] = e.t_us;
            out.events[kept++] = e;
        }
        out.events.resize(kept);
    }

    if (out.events.size() > cfg.max_events) {
        out.events.resize(cfg.max_events);
        out.stats.truncated = true;
    }

    // Ground truth at every frame boundary plus the session end.
    for (int f = 0; f <= session.n_frames; ++f) {
        const double t_us = f < session.n_frames ? session.frame_start_us(f)
                                                 : session.boundary_us(n_chips);
        GroundTruthSample g;
        g.t_us = std::llround(t_us);
        g.distance_m = ground_truth_distance(cfg.trajectory, bar, t_us * 1e-6);
        out.truth.push_back(g);
    }
    return out;
}

void write_truth_csv(std::ostream& os, const std::vector<GroundTruthSample>& truth) {
    os << "t_us,distance_m\n";
    char buf[64];
    for (const GroundTruthSample& g : truth) {
        const int n = std::snprintf(buf, sizeof buf, "%lld,%.6f\n",
                                    static_cast<long long>(g.t_us), g.distance_m);
        os.write(buf, n);
    }
}

std::vector<GroundTruthSample> read_truth_csv(std::istream& is) {
    std::vector<GroundTruthSample> out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (lineno == 1) {
            if (line.rfind("t_us,distance_m", 0) != 0)
                throw std::runtime_error("truth csv: missing 't_us,distance_m' header");
            continue;
        }
        if (line.empty()) continue;
        long long t = 0;
        double d = 0.0;
        if (std::sscanf(line.c_str(), "%lld,%lf", &t, &d) != 2)
            throw std::runtime_error("truth csv: bad row on line " + std::to_string(lineno));
        out.push_back(GroundTruthSample{t, d});
    }
    return out;
}

}  // namespace evlink::sim

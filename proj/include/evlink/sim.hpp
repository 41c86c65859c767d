// Synthetic event-camera channel.
//
// The LED bar is a vertical column of point sources driven by the session
// chip streams; the camera translates along the bar's axis of motion (the
// bar position is expressed in the camera frame: x right, y down, z
// forward). An ideal transition sensor emits one event per pixel whenever
// the net luminance rasterized onto that pixel changes sign at a chip
// boundary; the noise model then drops, perturbs and pollutes that stream.
//
// Everything is driven by a single seed. Miss decisions come from one RNG
// stream per LED and jitter/spurious noise from dedicated streams consumed
// in a fixed order, so the output is reproducible event-for-event no matter
// how the work is scheduled.

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "evlink/events.hpp"
#include "evlink/tx.hpp"

namespace evlink::sim {

struct CameraModel {
    double focal_m = 0.035;
    double pixel_pitch_m = 5e-6;
    int width = 1280;
    int height = 720;
    double cx = 640.0;
    double cy = 360.0;
};

// Pinhole projection of a camera-frame point to pixel coordinates.
// Throws std::invalid_argument unless Z > 0.
std::array<double, 2> project_point(const CameraModel& cam, double x_m, double y_m,
                                    double z_m);

struct LedBarLayout {
    int n_leds = 96;
    double spacing_m = 0.01;    // centre-to-centre along the bar
    int leds_per_cluster = 6;
    double base_y_m = -0.475;   // LED 0 centre, relative to the optical axis

    int n_clusters() const { return n_leds / leds_per_cluster; }
    int cluster_of(int led) const { return led / leds_per_cluster; }
    double led_y_m(int led) const { return base_y_m + led * spacing_m; }
    double cluster_center_y_m(int k) const {
        return base_y_m + (k * leds_per_cluster + (leds_per_cluster - 1) * 0.5) * spacing_m;
    }
    double bar_center_y_m() const { return base_y_m + (n_leds - 1) * 0.5 * spacing_m; }
    // Physical spacing between two cluster centres (the ranging baseline).
    double baseline_m(int ki, int kj) const {
        double d = cluster_center_y_m(ki) - cluster_center_y_m(kj);
        return d < 0 ? -d : d;
    }
};

struct Trajectory {
    double speed_mps = 30.0 / 3.6; // along the longitudinal (z) axis
    double lateral_m = 1.5;        // bar offset to the left: x = -lateral_m
    double start_m = 30.0;         // longitudinal distance at t = 0
    double end_m = 100.0;          // receding if end > start, approaching if <
    double vibration_amp_px = 0.0; // vertical image shake, sinusoidal
    double vibration_freq_hz = 100.0;

    double duration_s() const;          // |end-start| / speed; +inf at speed 0
    double longitudinal_m(double t_s) const;
    double vibration_px(double t_s) const;
};

// Euclidean camera-to-bar-centre distance at time t. Throws
// std::out_of_range when t is outside [0, duration].
double ground_truth_distance(const Trajectory& traj, const LedBarLayout& layout,
                             double t_s);

struct EventNoiseParams {
    double miss_prob = 0.0;        // drop probability per signal event
    double spurious_rate = 0.0;    // spurious events / pixel / second
    double neg_bias = 1.0;         // spurious negative:positive polarity ratio
    double jitter_us = 0.0;        // uniform +/- timestamp jitter (< half chip)
    double refractory_us = 0.0;    // min same-pixel spacing; 0 disables
    int spurious_margin_px = 4;    // bar-bbox expansion for the spurious region

    // Matches the behaviour of the event sensor the system targets: some
    // loss, a visible spurious floor with a strong negative-polarity skew.
    static EventNoiseParams imx636_defaults() {
        EventNoiseParams n;
        n.miss_prob = 0.1;
        n.spurious_rate = 1000.0;
        n.neg_bias = 2.0;
        return n;
    }
};

struct SimConfig {
    CameraModel camera;
    LedBarLayout layout;
    Trajectory trajectory;
    EventNoiseParams noise;
    std::uint64_t seed = 1;
    int footprint_px = 3;               // odd tent-profile side rasterized per LED
    double contrast_threshold = 0.05;   // min |net luminance change| that fires
    std::uint64_t max_events = 80'000'000;
};

struct GroundTruthSample {
    std::int64_t t_us = 0;
    double distance_m = 0.0;
};

struct SimStats {
    std::uint64_t n_signal = 0;     // transition events kept
    std::uint64_t n_missed = 0;     // transition pixel hits dropped by miss_prob
    std::uint64_t n_spurious = 0;
    std::uint64_t n_suppressed = 0; // removed by the refractory rule
    bool truncated = false;         // stream hit max_events and was cut
};

struct SimResult {
    std::vector<Event> events;              // sorted by (t, y, x, p)
    std::vector<GroundTruthSample> truth;   // one per frame boundary + session end
    SimStats stats;
};

// Renders the session through the channel. Throws std::invalid_argument on
// inconsistent config (layout vs session cluster count, jitter >= half chip,
// trajectory shorter than the session, bar behind the camera).
SimResult simulate_events(const SimConfig& cfg, const tx::Session& session);

// Ground-truth CSV: header "t_us,distance_m".
void write_truth_csv(std::ostream& os, const std::vector<GroundTruthSample>& truth);
std::vector<GroundTruthSample> read_truth_csv(std::istream& is);

}  // namespace evlink::sim

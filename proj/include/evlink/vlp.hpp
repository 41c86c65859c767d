// Ranging: phase-only correlation between cluster probability maps,
// sub-pixel peak refinement, baseline triangulation and robust aggregation
// of per-pair distance estimates.

#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "evlink/sim.hpp"

namespace evlink::vlp {

// Per-cluster pixel presence-probability window. Power-of-two dimensions;
// origin is the absolute pixel of v[0]. Maps compared by poc() may have
// different origins: the integer origin delta is added to the measured
// displacement afterwards.
struct PixelProbMap {
    int origin_x = 0, origin_y = 0;
    int w = 0, h = 0;
    std::vector<double> v; // row-major [y*w + x], values in [0,1]

    double at(int x, int y) const { return v[size_t(y) * w + x]; }
    double& at(int x, int y) { return v[size_t(y) * w + x]; }
    // Intensity centroid in absolute pixel coordinates; (origin-centred
    // zeros give origin itself when the map is empty).
    void centroid(double& cx, double& cy) const;
};

struct CorrelationSurface {
    int w = 0, h = 0;
    std::vector<double> v; // row-major, real part of the normalized cross power

    double at(int x, int y) const { return v[size_t(y) * w + x]; }
    // Integer argmax folded into signed displacement range [-w/2, w/2).
    void peak(int& dx, int& dy, double& value) const;
};

// Phase-only correlation of equally sized power-of-two maps. If b equals a
// circularly shifted by (sx, sy), the surface peaks at (sx, sy). Flat-zero
// spectral bins contribute nothing. Values lie in [-1, 1] up to numerical
// noise. Throws std::invalid_argument on size mismatch or non-power-of-two.
CorrelationSurface poc(const PixelProbMap& a, const PixelProbMap& b);

// Split form of poc() so one map's spectrum can be reused across pairs.
std::vector<std::complex<double>> poc_spectrum(const PixelProbMap& map);
CorrelationSurface poc_from_spectra(const std::vector<std::complex<double>>& fa,
                                    const std::vector<std::complex<double>>& fb,
                                    int w, int h);

struct SubpixelPeak {
    double dx = 0.0, dy = 0.0; // signed displacement, sub-pixel
    double value = 0.0;        // surface value at the integer peak
    bool degenerate = false;   // fit fell back to the integer peak
};

// Integer peak plus per-axis least-squares fit of amplitude*sinc(x - d)
// through the peak and two neighbours each side (circular indexing),
// d constrained to (-1, 1). Degenerate fits keep the integer location.
SubpixelPeak subpixel_peak(const CorrelationSurface& surface);

// Distance from projected pixel separation: L = f*S / (l_px * pitch).
// Throws std::invalid_argument unless l_px > 0 and S > 0.
double triangulate(double l_px, double baseline_m, const sim::CameraModel& cam);

// Range error induced by a pixel measurement error of delta_px at true
// distance L: |f*S/((l' - delta_px)*pitch) - L| with l' = f*S/(L*pitch).
// Throws std::invalid_argument when delta_px >= l'.
double theoretical_error(double distance_m, double delta_px, double baseline_m,
                         const sim::CameraModel& cam);

struct RangeEstimate {
    double distance_m = 0.0;
    double baseline_m = 0.0; // weight ~ baseline^2
    double l_px = 0.0;       // measured pixel displacement behind distance_m
    int cluster_i = 0, cluster_j = 0;
};

struct AggregateResult {
    double distance_m = 0.0;
    int n_used = 0;        // estimates surviving the outlier rejection
    bool degraded = false; // fell back to the plain median
};

// Robust fusion of >= 3 per-pair estimates: drop one max and one min, then
// reject outliers outside [Q1 - 1.5 IQR, Q3 + 1.5 IQR] (linear-interpolation
// quartiles), then average weighted by baseline^2. If nothing survives, the
// unweighted median of the original list is returned with degraded set.
AggregateResult aggregate(const std::vector<RangeEstimate>& estimates);

// Unweighted median of the distances (fallback path, exposed for reuse).
double median_distance(std::vector<double> values);

}  // namespace evlink::vlp

#include "evlink/vlp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

namespace evlink::vlp {

namespace {

bool is_pow2(int v) { return v >= 1 && (v & (v - 1)) == 0; }

// Iterative radix-2 complex FFT, in place. inverse applies conjugate
// transform and 1/N scaling. Sizes here are small powers of two.
void fft(std::vector<std::complex<double>>& a, bool inverse) {
    const size_t n = a.size();
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * M_PI / double(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse)
        for (auto& x : a) x /= double(n);
}

void fft2d(std::vector<std::complex<double>>& a, int w, int h, bool inverse) {
    std::vector<std::complex<double>> line;
    line.resize(std::max(w, h));
    for (int y = 0; y < h; ++y) {
        line.assign(a.begin() + size_t(y) * w, a.begin() + size_t(y + 1) * w);
        fft(line, inverse);
        std::copy(line.begin(), line.end(), a.begin() + size_t(y) * w);
    }
    std::vector<std::complex<double>> col(h);
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) col[y] = a[size_t(y) * w + x];
        fft(col, inverse);
        for (int y = 0; y < h; ++y) a[size_t(y) * w + x] = col[y];
    }
}

}  // namespace

void PixelProbMap::centroid(double& cx, double& cy) const {
    double sum = 0.0, sx = 0.0, sy = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double val = at(x, y);
            sum += val;
            sx += val * x;
            sy += val * y;
        }
    if (sum > 0.0) {
        cx = origin_x + sx / sum;
        cy = origin_y + sy / sum;
    } else {
        cx = origin_x;
        cy = origin_y;
    }
}

void CorrelationSurface::peak(int& dx, int& dy, double& value) const {
    int best = 0;
    for (int i = 1; i < w * h; ++i)
        if (v[i] > v[best]) best = i;
    int px = best % w, py = best / w;
    dx = px >= w / 2 ? px - w : px;
    dy = py >= h / 2 ? py - h : py;
    value = v[best];
}

std::vector<std::complex<double>> poc_spectrum(const PixelProbMap& map) {
    if (!is_pow2(map.w) || !is_pow2(map.h))
        throw std::invalid_argument("poc: dimensions must be powers of two");
    std::vector<std::complex<double>> f(map.v.begin(), map.v.end());
    fft2d(f, map.w, map.h, false);
    return f;
}

CorrelationSurface poc_from_spectra(const std::vector<std::complex<double>>& fa,
                                    const std::vector<std::complex<double>>& fb,
                                    int w, int h) {
    if (fa.size() != fb.size() || fa.size() != size_t(w) * size_t(h))
        throw std::invalid_argument("poc: spectrum sizes differ");
    const size_t n = fa.size();
    // Cross power F(b) * conj(F(a)), phase normalized. With this order, a
    // circular shift of +s applied to produce b peaks at +s.
    std::vector<std::complex<double>> r(n);
    for (size_t i = 0; i < n; ++i) {
        const std::complex<double> c = fb[i] * std::conj(fa[i]);
        const double mag = std::abs(c);
        r[i] = mag > 0.0 ? c / mag : std::complex<double>(0.0, 0.0);
    }
    fft2d(r, w, h, true);
    CorrelationSurface s;
    s.w = w;
    s.h = h;
    s.v.resize(n);
    for (size_t i = 0; i < n; ++i) s.v[i] = r[i].real();
    return s;
}

CorrelationSurface poc(const PixelProbMap& a, const PixelProbMap& b) {
    if (a.w != b.w || a.h != b.h)
        throw std::invalid_argument("poc: map sizes differ");
    return poc_from_spectra(poc_spectrum(a), poc_spectrum(b), a.w, a.h);
}

namespace {

double sinc(double u) {
    if (std::abs(u) < 1e-12) return 1.0;
    const double pu = M_PI * u;
    return std::sin(pu) / pu;
}

// Least-squares fit of r[i] ~ A * sinc(i - d), i in {-2..2}, d in (-1, 1).
// Returns false when the fit is degenerate (non-positive amplitude or the
// centre sample is not a strict local maximum).
bool fit_sinc_axis(const double r[5], double& d_out) {
    if (!(r[2] > r[1] && r[2] > r[3]) || r[2] <= 0.0) return false;
    double best_d = 0.0, best_res = std::numeric_limits<double>::infinity();
    auto residual_at = [&](double d) {
        double ss = 0.0, rs = 0.0;
        for (int i = 0; i < 5; ++i) {
            const double s = sinc(double(i - 2) - d);
            ss += s * s;
            rs += r[i] * s;
        }
        if (ss <= 0.0 || rs <= 0.0) return std::numeric_limits<double>::infinity();
        const double amp = rs / ss; // optimal amplitude for this d
        double res = 0.0;
        for (int i = 0; i < 5; ++i) {
            const double e = r[i] - amp * sinc(double(i - 2) - d);
            res += e * e;
        }
        return res;
    };
    // Coarse-to-fine scan; the residual is smooth in d.
    for (double d = -0.99; d <= 0.99; d += 0.01) {
        const double res = residual_at(d);
        if (res < best_res) {
            best_res = res;
            best_d = d;
        }
    }
    for (double d = best_d - 0.01; d <= best_d + 0.01; d += 0.0001) {
        if (d <= -1.0 || d >= 1.0) continue;
        const double res = residual_at(d);
        if (res < best_res) {
            best_res = res;
            best_d = d;
        }
    }
    if (!std::isfinite(best_res)) return false;
    d_out = best_d;
    return true;
}

}  // namespace

SubpixelPeak subpixel_peak(const CorrelationSurface& surface) {
    SubpixelPeak out;
    int ipx = 0, ipy = 0;
    surface.peak(ipx, ipy, out.value);
    const int px = (ipx % surface.w + surface.w) % surface.w;
    const int py = (ipy % surface.h + surface.h) % surface.h;

    double rx[5], ry[5];
    for (int i = -2; i <= 2; ++i) {
        rx[i + 2] = surface.at((px + i + 2 * surface.w) % surface.w, py);
        ry[i + 2] = surface.at(px, (py + i + 2 * surface.h) % surface.h);
    }
    double ddx = 0.0, ddy = 0.0;
    const bool okx = fit_sinc_axis(rx, ddx);
    const bool oky = fit_sinc_axis(ry, ddy);
    out.degenerate = !(okx && oky);
    out.dx = ipx + (okx ? ddx : 0.0);
    out.dy = ipy + (oky ? ddy : 0.0);
    return out;
}

double triangulate(double l_px, double baseline_m, const sim::CameraModel& cam) {
    if (!(l_px > 0.0))
        throw std::invalid_argument("triangulate: pixel separation must be positive");
    if (!(baseline_m > 0.0))
        throw std::invalid_argument("triangulate: baseline must be positive");
    return cam.focal_m * baseline_m / (l_px * cam.pixel_pitch_m);
}

double theoretical_error(double distance_m, double delta_px, double baseline_m,
                         const sim::CameraModel& cam) {
    if (!(distance_m > 0.0))
        throw std::invalid_argument("theoretical_error: distance must be positive");
    const double l_px = cam.focal_m * baseline_m / (distance_m * cam.pixel_pitch_m);
    if (delta_px >= l_px)
        throw std::invalid_argument("theoretical_error: pixel error exceeds the separation");
    const double biased = cam.focal_m * baseline_m / ((l_px - delta_px) * cam.pixel_pitch_m);
    return std::abs(biased - distance_m);
}

double median_distance(std::vector<double> values) {
    if (values.empty())
        throw std::invalid_argument("median_distance: empty input");
    std::sort(values.begin(), values.end());
    const size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

// Linear-interpolation quantile on sorted data (index p*(n-1)).
double quantile_sorted(const std::vector<double>& sorted, double p) {
    const double idx = p * double(sorted.size() - 1);
    const size_t lo = static_cast<size_t>(std::floor(idx));
    const size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = idx - double(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

AggregateResult aggregate(const std::vector<RangeEstimate>& estimates) {
    if (estimates.size() < 3)
        throw std::invalid_argument("aggregate: need at least 3 estimates");

    // Drop one instance each of the extreme values.
    size_t imax = 0, imin = 0;
    for (size_t i = 1; i < estimates.size(); ++i) {
        if (estimates[i].distance_m > estimates[imax].distance_m) imax = i;
        if (estimates[i].distance_m < estimates[imin].distance_m) imin = i;
    }
    if (imin == imax) imin = (imax + 1) % estimates.size(); // all equal: drop two anyway
    std::vector<RangeEstimate> kept;
    kept.reserve(estimates.size() - 2);
    for (size_t i = 0; i < estimates.size(); ++i)
        if (i != imax && i != imin) kept.push_back(estimates[i]);

    AggregateResult out;
    std::vector<double> original;
    original.reserve(estimates.size());
    for (const auto& e : estimates) original.push_back(e.distance_m);

    if (kept.empty()) {
        out.distance_m = median_distance(original);
        out.degraded = true;
        return out;
    }

    std::vector<double> sorted;
    sorted.reserve(kept.size());
    for (const auto& e : kept) sorted.push_back(e.distance_m);
    std::sort(sorted.begin(), sorted.end());
    const double q1 = quantile_sorted(sorted, 0.25);
    const double q3 = quantile_sorted(sorted, 0.75);
    const double iqr = q3 - q1;
    const double lo = q1 - 1.5 * iqr;
    const double hi = q3 + 1.5 * iqr;

    double wsum = 0.0, dsum = 0.0;
    int n_used = 0;
    for (const auto& e : kept) {
        if (e.distance_m < lo || e.distance_m > hi) continue;
        const double w = e.baseline_m * e.baseline_m;
        wsum += w;
        dsum += w * e.distance_m;
        ++n_used;
    }
    if (n_used < 1 || wsum <= 0.0) {
        out.distance_m = median_distance(original);
        out.degraded = true;
        return out;
    }
    out.distance_m = dsum / wsum;
    out.n_used = n_used;
    return out;
}

}  // namespace evlink::vlp

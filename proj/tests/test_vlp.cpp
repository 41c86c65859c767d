// Ranging: the phase-correlation stack against spectral/longhand oracles,
// triangulation arithmetic, and the robust fusion rules.

#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "evlink/rng.hpp"
#include "evlink/vlp.hpp"

using namespace evlink;

namespace {

vlp::PixelProbMap random_map(int w, int h, std::uint64_t seed) {
    vlp::PixelProbMap m;
    m.w = w;
    m.h = h;
    m.v.assign(size_t(w) * h, 0.0);
    std::mt19937_64 g(seed);
    for (auto& v : m.v) v = uniform01(g);
    return m;
}

// b(x, y) = a(x - sx, y - sy), circular.
vlp::PixelProbMap shifted(const vlp::PixelProbMap& a, int sx, int sy) {
    vlp::PixelProbMap b = a;
    for (int y = 0; y < a.h; ++y)
        for (int x = 0; x < a.w; ++x)
            b.v[size_t((y + sy + a.h) % a.h) * a.w + (x + sx + a.w) % a.w] = a.at(x, y);
    return b;
}

// Band-limited periodic test pattern: a handful of cosine plane waves.
// Being analytic, it can be evaluated at fractionally shifted positions
// exactly, which makes the true sub-pixel displacement known by design.
struct WavePattern {
    struct Comp {
        double fx, fy, phase, amp;
    };
    std::vector<Comp> comps;
    int n = 0;

    // Every representable frequency below Nyquist carries energy. Phase
    // correlation equalizes bin amplitudes, so a sparse or narrow spectrum
    // leaves a broadened, ambiguous peak; the full band reproduces the
    // cardinal-sine peak shape the refinement models.
    static WavePattern make(int n, std::uint64_t seed) {
        WavePattern p;
        p.n = n;
        std::mt19937_64 g(seed);
        for (int fx = 0; fx <= n / 2 - 1; ++fx)
            for (int fy = -(n / 2 - 1); fy <= n / 2 - 1; ++fy) {
                if (fx == 0 && fy <= 0) continue;
                WavePattern::Comp c;
                c.fx = double(fx);
                c.fy = double(fy);
                c.phase = uniform(g, 0.0, 6.283185307179586);
                c.amp = uniform(g, 0.5, 1.0);
                p.comps.push_back(c);
            }
        return p;
    }

    double eval(double x, double y) const {
        double v = 2.0; // positive offset keeps the map probability-like
        for (const auto& c : comps)
            v += c.amp * std::cos(6.283185307179586 * (c.fx * x + c.fy * y) / n + c.phase);
        return v;
    }

    vlp::PixelProbMap sample(double sx, double sy) const {
        vlp::PixelProbMap m;
        m.w = n;
        m.h = n;
        m.v.assign(size_t(n) * n, 0.0);
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) m.v[size_t(y) * n + x] = eval(x - sx, y - sy);
        return m;
    }
};

}  // namespace

TEST_CASE("spectrum matches a direct discrete fourier transform") {
    const auto m = random_map(8, 8, 40);
    const auto fast = vlp::poc_spectrum(m);
    REQUIRE(fast.size() == 64);
    for (int ky = 0; ky < 8; ++ky)
        for (int kx = 0; kx < 8; ++kx) {
            std::complex<double> slow{0.0, 0.0};
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x) {
                    const double ang = -6.283185307179586 * (double(kx * x) / 8.0 + double(ky * y) / 8.0);
                    slow += m.at(x, y) * std::complex<double>(std::cos(ang), std::sin(ang));
                }
            CHECK(std::abs(fast[size_t(ky) * 8 + kx] - slow) < 1e-9);
        }
}

TEST_CASE("phase correlation recovers integer circular shifts exactly") {
    std::mt19937_64 g(17);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = (trial % 2) ? 32 : 16;
        const auto a = random_map(n, n, 100 + trial);
        const int sx = int(uniform_index(g, n)) - n / 2;
        const int sy = int(uniform_index(g, n)) - n / 2;
        const auto b = shifted(a, sx, sy);

        const auto surf = vlp::poc(a, b);
        int dx = 0, dy = 0;
        double value = 0.0;
        surf.peak(dx, dy, value);
        CHECK(dx == sx);
        CHECK(dy == sy);
        CHECK(value == doctest::Approx(1.0).epsilon(1e-6));
        for (double v : surf.v) {
            CHECK(v <= 1.0 + 1e-9);
            CHECK(v >= -1.0 - 1e-9);
        }

        // The split-spectrum form computes the same surface.
        const auto fa = vlp::poc_spectrum(a);
        const auto fb = vlp::poc_spectrum(b);
        const auto surf2 = vlp::poc_from_spectra(fa, fb, n, n);
        REQUIRE(surf2.v.size() == surf.v.size());
        for (size_t i = 0; i < surf.v.size(); ++i)
            CHECK(surf2.v[i] == doctest::Approx(surf.v[i]).epsilon(1e-12));
    }
}

TEST_CASE("phase correlation validates its inputs") {
    const auto a = random_map(16, 16, 1);
    const auto b = random_map(32, 32, 2);
    CHECK_THROWS_AS(vlp::poc(a, b), std::invalid_argument);
    vlp::PixelProbMap odd;
    odd.w = 12;
    odd.h = 12;
    odd.v.assign(144, 0.5);
    CHECK_THROWS_AS(vlp::poc(odd, odd), std::invalid_argument);
}

TEST_CASE("subpixel refinement resolves fractional shifts") {
    std::mt19937_64 g(23);
    for (int trial = 0; trial < 10; ++trial) {
        const auto pat = WavePattern::make(32, 500 + trial);
        const double sx = uniform(g, -2.0, 2.0);
        const double sy = uniform(g, -2.0, 2.0);
        const auto a = pat.sample(0.0, 0.0);
        const auto b = pat.sample(sx, sy);

        const auto peak = vlp::subpixel_peak(vlp::poc(a, b));
        CHECK_FALSE(peak.degenerate);
        CHECK(std::abs(peak.dx - sx) < 0.05);
        CHECK(std::abs(peak.dy - sy) < 0.05);
    }
}

TEST_CASE("subpixel refinement keeps exact integer peaks") {
    const auto a = random_map(32, 32, 9);
    const auto b = shifted(a, -5, 3);
    const auto peak = vlp::subpixel_peak(vlp::poc(a, b));
    CHECK(peak.dx == doctest::Approx(-5.0).epsilon(0.02));
    CHECK(peak.dy == doctest::Approx(3.0).epsilon(0.02));
    CHECK(peak.value == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("degenerate surfaces fall back to the integer peak") {
    vlp::CorrelationSurface flat;
    flat.w = 8;
    flat.h = 8;
    flat.v.assign(64, 0.25);
    const auto peak = vlp::subpixel_peak(flat);
    CHECK(peak.degenerate);
    CHECK(peak.dx == doctest::Approx(std::round(peak.dx)));
    CHECK(peak.dy == doctest::Approx(std::round(peak.dy)));
}

TEST_CASE("map centroid is the intensity mean in absolute pixels") {
    vlp::PixelProbMap m;
    m.origin_x = 100;
    m.origin_y = 50;
    m.w = 4;
    m.h = 4;
    m.v.assign(16, 0.0);
    m.at(1, 2) = 1.0;
    m.at(3, 2) = 1.0;
    double cx = 0, cy = 0;
    m.centroid(cx, cy);
    CHECK(cx == doctest::Approx(102.0));
    CHECK(cy == doctest::Approx(52.0));

    vlp::PixelProbMap empty;
    empty.origin_x = 7;
    empty.origin_y = 8;
    empty.w = 4;
    empty.h = 4;
    empty.v.assign(16, 0.0);
    empty.centroid(cx, cy);
    CHECK(cx == doctest::Approx(7.0));
    CHECK(cy == doctest::Approx(8.0));
}

TEST_CASE("triangulation matches the pinhole relation both ways") {
    sim::CameraModel cam;
    // l' = f S / (L pitch); feeding it back must return L.
    for (double L : {30.0, 50.0, 100.0}) {
        const double l_px = (0.035 * 0.30) / (L * 5e-6);
        CHECK(vlp::triangulate(l_px, 0.30, cam) == doctest::Approx(L).epsilon(1e-12));
    }
    // Longhand spot value: 70 px at 0.3 m baseline.
    CHECK(vlp::triangulate(70.0, 0.30, cam) ==
          doctest::Approx((0.035 * 0.30) / (70.0 * 5e-6)).epsilon(1e-12));

    CHECK_THROWS_AS(vlp::triangulate(0.0, 0.3, cam), std::invalid_argument);
    CHECK_THROWS_AS(vlp::triangulate(-2.0, 0.3, cam), std::invalid_argument);
    CHECK_THROWS_AS(vlp::triangulate(10.0, 0.0, cam), std::invalid_argument);
}

TEST_CASE("theory curve hits its arithmetic anchor and grows with range") {
    sim::CameraModel cam;
    CHECK(vlp::theoretical_error(50.0, 1.0, 0.9, cam) == doctest::Approx(0.4).epsilon(1e-6));

    double prev = 0.0;
    for (double L : {30.0, 50.0, 70.0, 90.0}) {
        const double e = vlp::theoretical_error(L, 0.5, 0.78, cam);
        CHECK(e > prev);
        prev = e;
    }

    // The error bound collapses when the measurement consumes the whole
    // separation.
    const double l_small = 0.035 * 0.9 / (50.0 * 5e-6);
    CHECK_THROWS_AS(vlp::theoretical_error(50.0, l_small, 0.9, cam), std::invalid_argument);
}

TEST_CASE("fusion drops extremes, rejects outliers and weights by baseline") {
    auto est = [](double d, double s) {
        vlp::RangeEstimate e;
        e.distance_m = d;
        e.baseline_m = s;
        return e;
    };

    // One max (45.0) and one min (29.9) go first; the survivors average
    // with weight baseline^2: (30.0*0.09 + 30.1*0.36) / 0.45.
    auto r = vlp::aggregate({est(30.0, 0.3), est(30.1, 0.6), est(29.9, 0.3), est(45.0, 0.3)});
    CHECK(r.n_used == 2);
    CHECK_FALSE(r.degraded);
    CHECK(r.distance_m == doctest::Approx((30.0 * 0.09 + 30.1 * 0.36) / 0.45).epsilon(1e-12));

    // Interquartile rejection: survivors {29.95, 30.0, 30.05, 30.1, 31.4},
    // quartiles 30.0/30.1, fences [29.85, 30.25] -> 31.4 is discarded.
    r = vlp::aggregate({est(30.0, 1), est(30.05, 1), est(30.1, 1), est(29.95, 1),
                        est(31.4, 1), est(80.0, 1), est(10.0, 1)});
    CHECK(r.n_used == 4);
    CHECK(r.distance_m == doctest::Approx((29.95 + 30.0 + 30.05 + 30.1) / 4.0).epsilon(1e-12));

    // All-equal inputs still drop two and keep the value.
    r = vlp::aggregate({est(42.0, 1), est(42.0, 1), est(42.0, 1)});
    CHECK(r.distance_m == doctest::Approx(42.0));
    CHECK(r.n_used == 1);

    // Zero baselines leave no usable weight: median fallback, degraded.
    r = vlp::aggregate({est(30.0, 0), est(31.0, 0), est(32.0, 0)});
    CHECK(r.degraded);
    CHECK(r.distance_m == doctest::Approx(31.0));

    CHECK_THROWS_AS(vlp::aggregate({est(30.0, 1), est(31.0, 1)}), std::invalid_argument);
}

TEST_CASE("median splits odd and even lists the usual way") {
    CHECK(vlp::median_distance({3.0, 1.0, 2.0}) == doctest::Approx(2.0));
    CHECK(vlp::median_distance({1.0, 2.0, 3.0, 10.0}) == doctest::Approx(2.5));
    CHECK(vlp::median_distance({7.0}) == doctest::Approx(7.0));
}

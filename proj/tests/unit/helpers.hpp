#pragma once

#include "clothfit/geometry.hpp"
#include "clothfit/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace clothfit::test {

inline VertexConfiguration random_config(Rng& rng, size_t n, double extent = 0.5) {
    VertexConfiguration cfg;
    cfg.reserve(n);
    for (size_t i = 0; i < n; ++i)
        cfg.emplace_back(rng.uniform(-extent, extent), rng.uniform(-extent, extent), 0.0);
    return cfg;
}

inline VertexConfiguration circle_config(size_t n, double radius = 1.0) {
    VertexConfiguration cfg;
    cfg.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        const double a = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n);
        cfg.emplace_back(radius * std::cos(a), radius * std::sin(a), 0.0);
    }
    return cfg;
}

// Mean planar distance computed independently of the library path.
inline double oracle_mean_distance(const VertexConfiguration& a, const VertexConfiguration& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double dx = a[i].x() - b[i].x();
        const double dy = a[i].y() - b[i].y();
        s += std::sqrt(dx * dx + dy * dy);
    }
    return s / static_cast<double>(a.size());
}

// Trimmed (truncated) registration cost of a candidate transform: mean over
// all vertices of min(residual, tau*scale), normalized by scale. Well
// defined for every transform, so grid minima are comparable.
inline double truncated_cost(const VertexConfiguration& v, const VertexConfiguration& g,
                             double tx, double ty, double theta, double tau, double scale) {
    const double c = std::cos(theta), s = std::sin(theta);
    const double cap = tau * scale;
    double acc = 0.0;
    for (size_t i = 0; i < v.size(); ++i) {
        const double gx = c * g[i].x() - s * g[i].y() + tx;
        const double gy = s * g[i].x() + c * g[i].y() + ty;
        const double d = std::hypot(gx - v[i].x(), gy - v[i].y());
        acc += std::min(d, cap);
    }
    return acc / (static_cast<double>(v.size()) * scale);
}

struct GridSearchResult {
    double tx = 0, ty = 0, theta = 0;
    double cost = 0;
};

// Exhaustive SE(2) oracle: sweeps theta at the given step over (-pi, pi];
// per theta the translation starts from the inlier-centroid fixpoint and is
// refined on a local grid at translation_step.
inline GridSearchResult se2_grid_search(const VertexConfiguration& v, const VertexConfiguration& g,
                                        double tau, double scale, double theta_step = 1e-3,
                                        double translation_step = 1e-3,
                                        double refine_half_width = 4e-3) {
    GridSearchResult best;
    best.cost = std::numeric_limits<double>::infinity();
    const double cap = tau * scale;
    const size_t n = v.size();

    const long n_theta = std::lround(2.0 * M_PI / theta_step);
    std::vector<double> rgx(n), rgy(n);
    for (long ti = 0; ti < n_theta; ++ti) {
        const double theta = -M_PI + theta_step * (static_cast<double>(ti) + 0.5);
        const double c = std::cos(theta), s = std::sin(theta);
        for (size_t i = 0; i < n; ++i) {
            rgx[i] = c * g[i].x() - s * g[i].y();
            rgy[i] = s * g[i].x() + c * g[i].y();
        }
        // Fixpoint of (inliers -> centroid translation), starting untrimmed.
        double tx = 0, ty = 0;
        {
            double sx = 0, sy = 0;
            for (size_t i = 0; i < n; ++i) {
                sx += v[i].x() - rgx[i];
                sy += v[i].y() - rgy[i];
            }
            tx = sx / static_cast<double>(n);
            ty = sy / static_cast<double>(n);
        }
        for (int it = 0; it < 5; ++it) {
            double sx = 0, sy = 0;
            size_t cnt = 0;
            for (size_t i = 0; i < n; ++i) {
                const double d = std::hypot(rgx[i] + tx - v[i].x(), rgy[i] + ty - v[i].y());
                if (d <= cap) {
                    sx += v[i].x() - rgx[i];
                    sy += v[i].y() - rgy[i];
                    ++cnt;
                }
            }
            if (cnt < 3) break;
            tx = sx / static_cast<double>(cnt);
            ty = sy / static_cast<double>(cnt);
        }
        // Local translation grid around the fixpoint.
        const long half = std::lround(refine_half_width / translation_step);
        for (long ix = -half; ix <= half; ++ix)
            for (long iy = -half; iy <= half; ++iy) {
                const double ctx = tx + translation_step * static_cast<double>(ix);
                const double cty = ty + translation_step * static_cast<double>(iy);
                double acc = 0.0;
                for (size_t i = 0; i < n; ++i) {
                    const double d =
                        std::hypot(rgx[i] + ctx - v[i].x(), rgy[i] + cty - v[i].y());
                    acc += std::min(d, cap);
                }
                acc /= static_cast<double>(n) * scale;
                if (acc < best.cost) best = {ctx, cty, theta, acc};
            }
    }
    return best;
}

// One-sample Kolmogorov-Smirnov test against U[lo, hi]; returns the
// asymptotic p-value.
inline double ks_uniform_pvalue(std::vector<double> samples, double lo, double hi) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (size_t i = 0; i < samples.size(); ++i) {
        const double cdf = (samples[i] - lo) / (hi - lo);
        const double lo_step = static_cast<double>(i) / n;
        const double hi_step = static_cast<double>(i + 1) / n;
        d = std::max({d, std::abs(cdf - lo_step), std::abs(cdf - hi_step)});
    }
    const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k)
        p += 2.0 * (k % 2 == 1 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    return std::clamp(p, 0.0, 1.0);
}

} // namespace clothfit::test

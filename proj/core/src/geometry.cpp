#include "clothfit/geometry.hpp"

#include "clothfit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace clothfit {

namespace {

constexpr int kMaxAlignIterations = 30;
constexpr double kConvergedMagnitude = 1e-6;
constexpr double kCoincidentSpread = 1e-12;

} // namespace

double wrap_angle(double theta) {
    const double two_pi = 2.0 * M_PI;
    theta = std::fmod(theta, two_pi);
    if (theta <= -M_PI) theta += two_pi;
    if (theta > M_PI) theta -= two_pi;
    return theta;
}

PlanarTransform PlanarTransform::rotation(double angle) {
    return {0.0, 0.0, wrap_angle(angle), false};
}

Eigen::Matrix2d PlanarTransform::linear() const {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    Eigen::Matrix2d rot;
    rot << c, -s, s, c;
    if (mirrored) rot.col(0) = -rot.col(0); // R * diag(-1, 1)
    return rot;
}

Eigen::Vector2d PlanarTransform::apply(const Eigen::Vector2d& p) const {
    return linear() * p + Eigen::Vector2d(tx, ty);
}

Eigen::Vector3d PlanarTransform::apply(const Eigen::Vector3d& p) const {
    const Eigen::Vector2d q = apply(Eigen::Vector2d(p.x(), p.y()));
    return {q.x(), q.y(), p.z()};
}

PlanarTransform PlanarTransform::inverse() const {
    // Linear part L = R(theta) M is orthonormal, so L^-1 = L^T, and for a
    // mirrored transform L^T = L's own form with theta' = theta (M R(-t) =
    // R(t) M). For the plain case theta' = -theta.
    PlanarTransform inv;
    inv.mirrored = mirrored;
    inv.theta = mirrored ? theta : wrap_angle(-theta);
    const Eigen::Vector2d t = linear().transpose() * Eigen::Vector2d(tx, ty);
    inv.tx = -t.x();
    inv.ty = -t.y();
    return inv;
}

PlanarTransform PlanarTransform::compose(const PlanarTransform& other) const {
    // (this ∘ other)(p) = L1 (L2 p + t2) + t1. With L = R(theta) M, the
    // mirror of `this` flips the sign of other's rotation contribution:
    // M R(t) = R(-t) M.
    PlanarTransform out;
    out.mirrored = mirrored != other.mirrored;
    out.theta = wrap_angle(theta + (mirrored ? -other.theta : other.theta));
    const Eigen::Vector2d t = linear() * Eigen::Vector2d(other.tx, other.ty) + Eigen::Vector2d(tx, ty);
    out.tx = t.x();
    out.ty = t.y();
    return out;
}

double PlanarTransform::magnitude() const {
    return std::hypot(tx, ty) + std::abs(theta);
}

PlanarTransform PlanarTransform::mirror_in_frame(const PlanarTransform& frame) {
    PlanarTransform reflect;
    reflect.mirrored = true; // x -> -x at the origin, theta = 0
    return frame.compose(reflect).compose(frame.inverse());
}

Eigen::Vector2d planar_centroid(const VertexConfiguration& cfg) {
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    for (const auto& p : cfg) c += planar(p);
    return cfg.empty() ? c : Eigen::Vector2d(c / static_cast<double>(cfg.size()));
}

Eigen::Vector2d planar_extents(const VertexConfiguration& cfg) {
    double lo_x = std::numeric_limits<double>::infinity(), hi_x = -lo_x;
    double lo_y = lo_x, hi_y = -lo_x;
    for (const auto& p : cfg) {
        lo_x = std::min(lo_x, p.x());
        hi_x = std::max(hi_x, p.x());
        lo_y = std::min(lo_y, p.y());
        hi_y = std::max(hi_y, p.y());
    }
    if (cfg.empty()) return Eigen::Vector2d::Zero();
    return {hi_x - lo_x, hi_y - lo_y};
}

VertexConfiguration apply_transform(const PlanarTransform& t, const VertexConfiguration& cfg) {
    VertexConfiguration out;
    out.reserve(cfg.size());
    for (const auto& p : cfg) out.push_back(t.apply(p));
    return out;
}

PlanarTransform fit_rigid_planar(const VertexConfiguration& src,
                                 const VertexConfiguration& dst,
                                 std::span<const int> subset) {
    if (subset.size() < 2)
        throw DegenerateSubset("fit_rigid_planar: need at least 2 correspondences");
    if (src.size() != dst.size())
        throw DimensionMismatch("fit_rigid_planar: src and dst differ in vertex count");

    Eigen::Vector2d mean_src = Eigen::Vector2d::Zero();
    Eigen::Vector2d mean_dst = Eigen::Vector2d::Zero();
    for (int i : subset) {
        mean_src += planar(src[static_cast<size_t>(i)]);
        mean_dst += planar(dst[static_cast<size_t>(i)]);
    }
    const double n = static_cast<double>(subset.size());
    mean_src /= n;
    mean_dst /= n;

    double dot = 0.0, cross = 0.0, spread = 0.0;
    for (int i : subset) {
        const Eigen::Vector2d a = planar(src[static_cast<size_t>(i)]) - mean_src;
        const Eigen::Vector2d b = planar(dst[static_cast<size_t>(i)]) - mean_dst;
        dot += a.dot(b);
        cross += a.x() * b.y() - a.y() * b.x();
        spread += a.squaredNorm();
    }
    if (spread <= kCoincidentSpread * n)
        throw DegenerateSubset("fit_rigid_planar: all src subset points coincide");

    PlanarTransform t;
    if (dot != 0.0 || cross != 0.0) t.theta = std::atan2(cross, dot);
    const Eigen::Vector2d trans = mean_dst - t.linear() * mean_src;
    t.tx = trans.x();
    t.ty = trans.y();
    return t;
}

namespace {

std::vector<int> all_indices(size_t n) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

std::vector<int> inliers_within(const VertexConfiguration& moved_goal,
                                const VertexConfiguration& v,
                                double radius) {
    std::vector<int> idx;
    idx.reserve(v.size());
    for (size_t i = 0; i < v.size(); ++i) {
        if ((planar(moved_goal[i]) - planar(v[i])).norm() <= radius)
            idx.push_back(static_cast<int>(i));
    }
    return idx;
}

} // namespace

namespace {

AlignmentResult run_trim_iteration(const VertexConfiguration& v, const VertexConfiguration& g,
                                   double radius, bool raw_first_filter) {
    const auto all = all_indices(v.size());

    AlignmentResult result;
    VertexConfiguration moved = g;
    // The paper's order filters on raw g-vs-v distances before any fit; the
    // alternative start fits untrimmed first.
    std::vector<int> inliers =
        raw_first_filter ? inliers_within(moved, v, radius) : all;

    for (int iter = 1; iter <= kMaxAlignIterations; ++iter) {
        result.iterations = iter;
        bool fallback = false;
        if (inliers.size() < 3) {
            inliers = all;
            fallback = true;
        }

        PlanarTransform inc = fit_rigid_planar(moved, v, inliers);
        result.transform = inc.compose(result.transform);
        moved = apply_transform(inc, moved);

        std::vector<int> next = inliers_within(moved, v, radius);
        const bool fixpoint = (next == inliers) || (fallback && next.size() < 3);
        result.untrimmed_fallback = fallback;
        result.inlier_indices = fallback ? all : inliers;
        if (fixpoint && inc.magnitude() < kConvergedMagnitude) break;
        inliers = std::move(next);
    }

    result.aligned_goal = apply_transform(result.transform, g);
    return result;
}

// Mean truncated residual: min(|T(g)_i - v_i|, radius), well defined for
// comparing fixpoints of the filter-fit iteration.
double truncated_cost(const VertexConfiguration& v, const AlignmentResult& r, double radius) {
    double acc = 0.0;
    for (size_t i = 0; i < v.size(); ++i)
        acc += std::min((planar(r.aligned_goal[i]) - planar(v[i])).norm(), radius);
    return acc / static_cast<double>(v.size());
}

} // namespace

AlignmentResult trimmed_align(const VertexConfiguration& v,
                              const VertexConfiguration& g,
                              double tau,
                              double scale) {
    if (v.size() != g.size())
        throw DimensionMismatch("trimmed_align: configurations differ in vertex count");
    if (v.size() < 3)
        throw DegenerateSubset("trimmed_align: need at least 3 vertices");
    if (!(tau > 0.0) || !(scale > 0.0))
        throw InvalidParams("trimmed_align: tau and scale must be positive");

    const double radius = tau * scale;

    // The filter-fit iteration is a local method; when the pose offset is
    // large, the raw first filter can latch onto a spurious partial overlap.
    // Run both starts and keep the better fixpoint so the reward stays
    // invariant to the cloth's pose.
    AlignmentResult raw_start = run_trim_iteration(v, g, radius, true);
    AlignmentResult untrimmed_start = run_trim_iteration(v, g, radius, false);
    if (truncated_cost(v, untrimmed_start, radius) < truncated_cost(v, raw_start, radius))
        return untrimmed_start;
    return raw_start;
}

} // namespace clothfit

#pragma once

#include <Eigen/Core>

#include <span>
#include <vector>

namespace clothfit {

// Ordered vertex positions of one cloth state. Index i in two configurations
// refers to the same mesh vertex, so correspondences are always known.
using VertexConfiguration = std::vector<Eigen::Vector3d>;

inline Eigen::Vector2d planar(const Eigen::Vector3d& p) { return {p.x(), p.y()}; }

Eigen::Vector2d planar_centroid(const VertexConfiguration& cfg);

// Axis-aligned planar bounding box extents (width, height).
Eigen::Vector2d planar_extents(const VertexConfiguration& cfg);

// Rigid planar pose: rotate (x,y) by theta about the workspace origin (after
// reflecting x when mirrored), then translate. z passes through untouched.
// Garment local frames put the canonical centroid at the origin, so
// rotation-about-origin is rotation-about-centroid for canonical goals.
struct PlanarTransform {
    double tx = 0.0;
    double ty = 0.0;
    double theta = 0.0; // radians in (-pi, pi]
    bool mirrored = false;

    static PlanarTransform identity() { return {}; }
    static PlanarTransform translation(double x, double y) { return {x, y, 0.0, false}; }
    static PlanarTransform rotation(double angle);
    // Reflection x -> -x expressed in the given frame's local coordinates.
    static PlanarTransform mirror_in_frame(const PlanarTransform& frame);

    Eigen::Vector2d apply(const Eigen::Vector2d& p) const;
    Eigen::Vector3d apply(const Eigen::Vector3d& p) const;
    Eigen::Matrix2d linear() const;

    PlanarTransform inverse() const;
    // this ∘ other: other is applied first.
    PlanarTransform compose(const PlanarTransform& other) const;

    // Translation norm plus |theta|; the convergence measure used by the
    // iterative alignment.
    double magnitude() const;
};

// theta wrapped into (-pi, pi].
double wrap_angle(double theta);

VertexConfiguration apply_transform(const PlanarTransform& t, const VertexConfiguration& cfg);

struct AlignmentResult {
    PlanarTransform transform;        // maps the input goal onto the fit
    VertexConfiguration aligned_goal; // transform applied to the input goal
    std::vector<int> inlier_indices;  // sorted; all indices when untrimmed
    int iterations = 0;
    bool untrimmed_fallback = false;  // fewer than 3 inliers forced a full fit
};

// Least-squares rigid planar fit (closed form).
//
// With centered points a_i = src_i - mean(src), b_i = dst_i - mean(dst):
//   theta = atan2(sum a_i x b_i, sum a_i . b_i)
//   t     = mean(dst) - R(theta) mean(src)
// Only (x,y) participate; mirrored is always false here (mirror handling is
// the reward layer's job). Throws DegenerateSubset when the subset has fewer
// than two indices or all src subset points coincide. A zero cross-covariance
// with spread-out src (e.g. all dst points coincident) is the degenerate
// rotation limit and yields theta = 0, a pure centroid match.
PlanarTransform fit_rigid_planar(const VertexConfiguration& src,
                                 const VertexConfiguration& dst,
                                 std::span<const int> subset);

// Trimmed iterative alignment of goal g onto current v with ground-truth
// correspondences. Vertices whose planar residual exceeds tau*scale are
// dropped, the rigid fit is recomputed on the survivors, and the two steps
// repeat until the inlier set is a fixpoint and the incremental transform
// magnitude falls below 1e-6 (at most 30 iterations). The first inlier set
// comes from raw g-vs-v distances, before any fit. If trimming would leave
// fewer than 3 inliers, the fit falls back to all vertices.
AlignmentResult trimmed_align(const VertexConfiguration& v,
                              const VertexConfiguration& g,
                              double tau,
                              double scale = 1.0);

} // namespace clothfit

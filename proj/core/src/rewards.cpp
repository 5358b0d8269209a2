#include "clothfit/rewards.hpp"

#include "clothfit/errors.hpp"

#include <cmath>
#include <limits>

namespace clothfit {

double normalization_scale(const VertexConfiguration& canonical) {
    const Eigen::Vector2d ext = planar_extents(canonical);
    if (ext.x() <= 0.0 || ext.y() <= 0.0)
        throw ZeroExtent("normalization_scale: canonical bounding box has zero extent");
    return std::sqrt(ext.x() * ext.y());
}

namespace {

double mean_planar_distance(const VertexConfiguration& a, const VertexConfiguration& b) {
    double sum = 0.0;
    for (size_t i = 0; i < a.size(); ++i) sum += (planar(a[i]) - planar(b[i])).norm();
    return sum / static_cast<double>(a.size());
}

} // namespace

double reward_unfactorized(const VertexConfiguration& v,
                           const VertexConfiguration& g,
                           double scale) {
    if (v.size() != g.size())
        throw DimensionMismatch("reward_unfactorized: configurations differ in vertex count");
    if (!(scale > 0.0)) throw InvalidParams("reward_unfactorized: scale must be positive");
    return -mean_planar_distance(v, g) / scale;
}

namespace {

RewardBreakdown evaluate_against(const VertexConfiguration& v,
                                 const VertexConfiguration& goal,
                                 const VertexConfiguration& original_g,
                                 const PlanarTransform& pre,
                                 bool mirrored,
                                 double alpha,
                                 double tau,
                                 double scale) {
    RewardBreakdown out;
    AlignmentResult align = trimmed_align(v, goal, tau, scale);
    // Fold the mirror pre-transform in so the reported transform maps the
    // original goal, and the invariant aligned_goal == T(g) holds exactly.
    out.alignment.transform = align.transform.compose(pre);
    out.alignment.aligned_goal = apply_transform(out.alignment.transform, original_g);
    out.alignment.inlier_indices = std::move(align.inlier_indices);
    out.alignment.iterations = align.iterations;
    out.alignment.untrimmed_fallback = align.untrimmed_fallback;

    out.r_c = -mean_planar_distance(v, out.alignment.aligned_goal) / scale;
    out.r_a = -mean_planar_distance(out.alignment.aligned_goal, goal) / scale;
    out.r_ca = (1.0 - alpha) * out.r_c + alpha * out.r_a;
    out.alpha = alpha;
    out.scale = scale;
    out.mirror_used = mirrored;
    return out;
}

} // namespace

RewardBreakdown reward_factorized(const VertexConfiguration& v,
                                  const VertexConfiguration& g,
                                  double alpha,
                                  double tau,
                                  double scale,
                                  const PlanarTransform& goal_frame) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw InvalidParams("reward_factorized: alpha must be in (0, 1)");

    const PlanarTransform mirror = PlanarTransform::mirror_in_frame(goal_frame);
    const VertexConfiguration g_mirror = apply_transform(mirror, g);

    RewardBreakdown plain =
        evaluate_against(v, g, g, PlanarTransform::identity(), false, alpha, tau, scale);
    RewardBreakdown flipped = evaluate_against(v, g_mirror, g, mirror, true, alpha, tau, scale);

    RewardBreakdown best = (flipped.r_ca > plain.r_ca) ? std::move(flipped) : std::move(plain);
    best.r_unf = reward_unfactorized(v, g, scale);
    return best;
}

double delta_reward(const RewardBreakdown& before, const RewardBreakdown& after) {
    if (before.scale != after.scale || before.alpha != after.alpha)
        throw MismatchedContext("delta_reward: breakdowns use different scale or alpha");
    return after.r_ca - before.r_ca;
}

size_t BinaryMask::popcount() const {
    size_t n = 0;
    for (uint8_t b : bits) n += (b != 0);
    return n;
}

BinaryMask make_mask(int width, int height) {
    BinaryMask m;
    m.width = width;
    m.height = height;
    m.bits.assign(static_cast<size_t>(width) * height, 0);
    return m;
}

double iou(const BinaryMask& a, const BinaryMask& b) {
    if (a.width != b.width || a.height != b.height)
        throw DimensionMismatch("iou: mask dimensions differ");
    size_t inter = 0, uni = 0;
    for (size_t i = 0; i < a.bits.size(); ++i) {
        const bool pa = a.bits[i] != 0, pb = b.bits[i] != 0;
        inter += (pa && pb);
        uni += (pa || pb);
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double coverage(const BinaryMask& current, const BinaryMask& goal) {
    if (current.width != goal.width || current.height != goal.height)
        throw DimensionMismatch("coverage: mask dimensions differ");
    const size_t g = goal.popcount();
    const size_t c = current.popcount();
    if (g == 0) return c == 0 ? 1.0 : std::numeric_limits<double>::infinity();
    return static_cast<double>(c) / static_cast<double>(g);
}

} // namespace clothfit

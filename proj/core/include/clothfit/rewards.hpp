#pragma once

#include "clothfit/geometry.hpp"

#include <cstdint>
#include <vector>

namespace clothfit {

// Defaults reported as best-performing for this objective.
constexpr double kDefaultAlpha = 0.6;
constexpr double kDefaultTau = 0.3;

// geometric mean sqrt(H*W) of the canonical configuration's planar
// bounding box. Every distance-based reward and tau are divided by it.
double normalization_scale(const VertexConfiguration& canonical);

// -(mean planar vertex distance between g and v) / scale.
double reward_unfactorized(const VertexConfiguration& v,
                           const VertexConfiguration& g,
                           double scale);

struct RewardBreakdown {
    double r_unf = 0.0; // unfactorized reward, <= 0
    double r_c = 0.0;   // canonicalization: -(mean |v - g'|) / scale
    double r_a = 0.0;   // alignment: -(mean |g' - g|) / scale
    double r_ca = 0.0;  // (1 - alpha) * r_c + alpha * r_a
    AlignmentResult alignment; // transform maps the *original* g onto g'
    double scale = 1.0;
    double alpha = kDefaultAlpha;
    bool mirror_used = false;
};

// Factorized reward. Runs the trimmed alignment against g and against g
// mirror-flipped in the goal's local frame, and keeps whichever gives the
// higher combined reward. goal_frame is the planar pose the goal was placed
// at; identity is correct when g is the canonical configuration itself.
RewardBreakdown reward_factorized(const VertexConfiguration& v,
                                  const VertexConfiguration& g,
                                  double alpha = kDefaultAlpha,
                                  double tau = kDefaultTau,
                                  double scale = 1.0,
                                  const PlanarTransform& goal_frame = PlanarTransform::identity());

// after.r_ca - before.r_ca. Throws MismatchedContext when the breakdowns
// were produced under different normalization scales or alpha.
double delta_reward(const RewardBreakdown& before, const RewardBreakdown& after);

struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> bits; // row-major, 0/1

    bool at(int x, int y) const { return bits[static_cast<size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool v) { bits[static_cast<size_t>(y) * width + x] = v ? 1 : 0; }
    size_t popcount() const;
};

BinaryMask make_mask(int width, int height);

// |a ∩ b| / |a ∪ b|; two empty masks agree vacuously (1).
double iou(const BinaryMask& a, const BinaryMask& b);

// |current| / |goal|.
double coverage(const BinaryMask& current, const BinaryMask& goal);

} // namespace clothfit

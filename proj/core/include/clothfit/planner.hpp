#pragma once

#include "clothfit/actionmaps.hpp"
#include "clothfit/rewards.hpp"
#include "clothfit/rng.hpp"
#include "clothfit/simulator.hpp"
#include "clothfit/tasks.hpp"

#include <optional>
#include <set>

namespace clothfit {

enum class Objective { Unfactorized, Factorized };

const char* objective_name(Objective o);

struct PolicyConfig {
    Objective objective = Objective::Factorized;
    double alpha = kDefaultAlpha;
    double tau = kDefaultTau;
    int candidates_per_step = 64;
    int max_steps = 10;
    std::set<PrimitiveKind> allowed_primitives{PrimitiveKind::Fling, PrimitiveKind::PickPlace};
    int workers = 1; // parallel candidate rollouts
};

// Settle/speed profile for candidate rollouts; cheaper than the profile the
// chosen action is finally executed with.
SimParams rollout_params(const SimParams& base);

struct GreedyStepResult {
    ActionCommand action;
    SimState next_state;
    double delta = 0.0;            // realized objective delta of the executed action
    double predicted_delta = 0.0;  // rollout estimate that won the argmax
    RewardBreakdown reward_before;
    RewardBreakdown reward_after;
};

// Rollout-greedy oracle step: samples candidate actions uniformly from the
// validity masks, evaluates each by cloning the state and executing the
// primitive, then executes the best one. Throws NoValidAction when the
// validity masks are empty.
GreedyStepResult greedy_step(const ClothSim& sim, const SimState& state,
                             const VertexConfiguration& goal, const PlanarTransform& goal_frame,
                             double scale, const PolicyConfig& config, Rng& rng);

// Keypoint positions tracked through the simulation (ground-truth mesh
// vertex indices).
Eigen::Vector3d keypoint_position(const GarmentMesh& mesh, const SimState& state,
                                  const std::string& name);

// Place point for a sleeve fold: if the target is farther than arm_length
// from the shoulder, it moves onto the reach circle along the original
// direction. z passes through.
Eigen::Vector3d clamp_place_to_arm_length(const Eigen::Vector3d& place,
                                          const Eigen::Vector3d& shoulder, double arm_length);

// Dual-arm folding heuristic: sleeves to the quarter/three-quarter waist
// points (clamped to an arm's length from the shoulders), then shoulders to
// waists. Warns when coverage is below 60%.
SimState fold_shirt(const ClothSim& sim, SimState state);

// Kinematic fold of the canonical vertices (reflections only, no dynamics):
// the reference folded configuration.
VertexConfiguration folded_goal(const GarmentMesh& mesh);

struct IroningBoard {
    Eigen::Vector2d center{0.0, 0.0};
    Eigen::Vector2d half_extents{0.3, 0.3};
};

struct IroningSchedule {
    std::array<PlanarTransform, 2> alignments; // left/right half on the board
};

// Two target alignments placing each half of the garment on the board.
IroningSchedule ironing_schedule(const GarmentMesh& mesh, const PlanarTransform& goal,
                                 const IroningBoard& board = {});

// Fraction of cloth material swept by the straight iron path across both
// alignments. Buried layers (not topmost at their pixel) do not count.
double ironing_score(const GarmentMesh& mesh, const VertexConfiguration& positions,
                     const IroningSchedule& schedule, const IroningBoard& board = {});

} // namespace clothfit

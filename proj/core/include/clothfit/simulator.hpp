#pragma once

#include "clothfit/garments.hpp"
#include "clothfit/geometry.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>

namespace clothfit {

inline constexpr int kNumGrippers = 2;

// Plain-data cloth state; cloning one is cheap and rollouts run on clones.
struct SimState {
    VertexConfiguration positions;
    std::vector<Eigen::Vector3d> velocities;
    // Vertex pinned to each gripper, -1 when the gripper is free.
    std::array<int, kNumGrippers> pinned{-1, -1};
    std::array<Eigen::Vector3d, kNumGrippers> gripper_pos{Eigen::Vector3d::Zero(),
                                                          Eigen::Vector3d::Zero()};
    std::array<Eigen::Vector3d, kNumGrippers> gripper_vel{Eigen::Vector3d::Zero(),
                                                          Eigen::Vector3d::Zero()};
    double time = 0.0;
    uint64_t rng_seed = 0;
};

struct SimParams {
    double dt = 1e-3;
    double gravity = 9.81;
    double mass_per_vertex = 0.008; // kg

    double k_structural = 600.0;
    double k_shear = 120.0;
    double k_bend = 30.0;
    // Cloth buckles instead of resisting in-plane compression; compressed
    // springs push back at this fraction of their stretch stiffness. Keep it
    // small or crumpled piles spring back open and never stay crumpled.
    double compression_ratio = 0.02;
    double spring_damping = 1.2;  // N s/m along the spring axis
    double global_damping = 0.05; // 1/s
    // Quadratic air drag per vertex, scaled by incident triangle area and
    // split by surface orientation: motion along the face normal is what
    // billows a fling open and keeps a falling drape from flaring. A lone
    // particle has no area and stays exactly ballistic.
    double air_drag_normal = 14.0;   // N s^2/m^2 per m^2
    double air_drag_tangent = 1.0;
    double friction = 0.4;        // Coulomb tangential/normal impulse ratio
    double contact_damping = 0.9; // velocity retained per step while touching ground

    double strain_limit = 2.0; // structural springs clamped to limit * rest
    int strain_iterations = 2;
    // Hard speed cap; desk-scale motion never gets near it, it only guards
    // against transients when a pinned vertex is yanked.
    double max_speed_clamp = 20.0;

    double workspace_half = 0.75; // 1.5 m square workspace
    double blowup_limit = 100.0;  // |coordinate| beyond this throws

    double settle_speed = 1e-3;   // m/s
    double settle_max_time = 5.0; // simulated seconds

    double grasp_radius = 0.02;
    double grasp_layer_tol = 0.01; // topmost-layer window for grasping

    // Gripper motion speeds (m/s). Descend speed during the fling is part of
    // PrimitiveSpec, not here.
    double lift_speed = 1.0;
    double move_speed = 1.0;
    double stretch_speed = 0.5;
    double fling_forward_speed = 2.0;
};

enum class PrimitiveKind { Fling, PickPlace };

const char* primitive_name(PrimitiveKind k);

struct FlingParams {
    double lift_margin = 0.05;   // ground clearance while lifted
    double max_stretch = 0.7;    // gripper separation cap
    double forward = 0.7;        // swing distance
    double descend_speed = 1.4;  // m/s
};

struct PickPlaceParams {
    double lift = 0.1;
};

struct PrimitiveSpec {
    PrimitiveKind kind = PrimitiveKind::PickPlace;
    Eigen::Vector3d grasp_a = Eigen::Vector3d::Zero();
    Eigen::Vector3d grasp_b = Eigen::Vector3d::Zero();
    // Unit planar swing direction for the fling; perpendicular to the
    // gripper line, fixed by the observation rotation that chose the action.
    Eigen::Vector2d fling_dir = Eigen::Vector2d::UnitY();
    FlingParams fling;
    PickPlaceParams pp;
};

// Optional per-step trajectory sink (debug dumps).
using StepObserver = std::function<void(const SimState&)>;

// Deterministic mass-spring cloth with ground contact and two kinematic
// grippers. The simulator itself is immutable and safe to share; each
// SimState must be confined to one thread at a time.
class ClothSim {
public:
    explicit ClothSim(std::shared_ptr<const GarmentMesh> mesh, SimParams params = {});

    const GarmentMesh& mesh() const { return *mesh_; }
    const std::shared_ptr<const GarmentMesh>& mesh_ptr() const { return mesh_; }
    const SimParams& params() const { return params_; }

    // Canonical pose resting on the ground, zero velocity.
    SimState make_rest_state(uint64_t seed = 0) const;

    // One semi-implicit Euler step: gravity, springs, damping, ground
    // contact with Coulomb friction, strain limiting, pinned overrides.
    void step(SimState& state, double dt) const;
    void step(SimState& state) const { step(state, params_.dt); }

    // Runs until max vertex speed < settle_speed or max_time elapses.
    void settle(SimState& state) const { settle(state, params_.settle_max_time, params_.settle_speed); }
    void settle(SimState& state, double max_time, double speed_threshold) const;

    double max_speed(const SimState& state) const;

    // Nearest topmost-layer vertex within radius of the point's planar
    // location; nullopt on a miss.
    std::optional<int> grasp_nearest(const SimState& state, const Eigen::Vector3d& point,
                                     double radius) const;
    std::optional<int> grasp_nearest(const SimState& state, const Eigen::Vector3d& point) const {
        return grasp_nearest(state, point, params_.grasp_radius);
    }

    SimState execute_primitive(SimState state, const PrimitiveSpec& spec,
                               const StepObserver& observer = nullptr) const;

    // Both arms pick and place simultaneously (folding heuristic). A miss
    // turns that arm into a no-op.
    SimState execute_dual_pick_place(SimState state, const Eigen::Vector3d& pick_a,
                                     const Eigen::Vector3d& place_a, const Eigen::Vector3d& pick_b,
                                     const Eigen::Vector3d& place_b, double lift = 0.1,
                                     const StepObserver& observer = nullptr) const;

    // Rigid planar teleport of the whole cloth (task generation).
    static void teleport(SimState& state, const PlanarTransform& t);

private:
    struct Mover; // scripted gripper trajectories

    void run_fling(SimState& state, const PrimitiveSpec& spec, const StepObserver& observer) const;
    void run_pick_place(SimState& state, const PrimitiveSpec& spec, const StepObserver& observer) const;

    std::shared_ptr<const GarmentMesh> mesh_;
    SimParams params_;
    std::vector<double> rest_lengths_;
    std::vector<double> stiffness_;
    std::vector<double> vertex_area_; // third of incident triangle area
};

} // namespace clothfit

#include "clothfit/planner.hpp"

#include "clothfit/errors.hpp"
#include "clothfit/logging.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace clothfit {

const char* objective_name(Objective o) {
    return o == Objective::Unfactorized ? "unfactorized" : "factorized";
}

SimParams rollout_params(const SimParams& base) {
    SimParams p = base;
    p.settle_max_time = 1.0;
    p.settle_speed = 6e-3;
    p.lift_speed = 1.3 * base.lift_speed;
    p.move_speed = 1.3 * base.move_speed;
    p.stretch_speed = 1.3 * base.stretch_speed;
    return p;
}

namespace {

double objective_value(const RewardBreakdown& r, Objective o) {
    return o == Objective::Unfactorized ? r.r_unf : r.r_ca;
}

// Uniform draw over all valid (primitive, entry, pixel) triples.
struct CandidatePool {
    struct Source {
        PrimitiveKind kind;
        const ValidityGrid* grid;
    };
    std::vector<Source> sources;
    std::vector<size_t> cumulative; // per source
    size_t total = 0;

    void add(PrimitiveKind kind, const ValidityGrid& grid) {
        sources.push_back({kind, &grid});
        total += grid.valid_count;
        cumulative.push_back(total);
    }

    std::pair<PrimitiveKind, std::array<int, 3>> pick(size_t index) const {
        size_t s = 0;
        while (index >= cumulative[s]) ++s;
        size_t offset = index - (s == 0 ? 0 : cumulative[s - 1]);
        const auto& grid = *sources[s].grid;
        size_t k = 0;
        while (offset >= grid.entry_counts[k]) offset -= grid.entry_counts[k++];
        const auto& mask = grid.per_entry[k];
        for (int y = 0; y < mask.height; ++y)
            for (int x = 0; x < mask.width; ++x) {
                if (!mask.at(x, y)) continue;
                if (offset == 0) return {sources[s].kind, {static_cast<int>(k), x, y}};
                --offset;
            }
        throw Error("candidate pool: index out of range");
    }
};

} // namespace

GreedyStepResult greedy_step(const ClothSim& sim, const SimState& state,
                             const VertexConfiguration& goal, const PlanarTransform& goal_frame,
                             double scale, const PolicyConfig& config, Rng& rng) {
    if (config.candidates_per_step < 1)
        throw InvalidParams("greedy_step: candidates_per_step must be >= 1");

    const TransformStack stack = build_stack(sim.mesh(), state.positions);

    std::vector<std::pair<PrimitiveKind, ValidityGrid>> grids;
    for (PrimitiveKind kind : {PrimitiveKind::Fling, PrimitiveKind::PickPlace}) {
        if (!config.allowed_primitives.count(kind)) continue;
        grids.emplace_back(kind, validity_mask(stack, kind, sim.params().workspace_half));
    }
    CandidatePool pool;
    for (const auto& [kind, grid] : grids) pool.add(kind, grid);
    if (pool.total == 0) throw NoValidAction("greedy_step: no valid action pixel");

    const RewardBreakdown before =
        reward_factorized(state.positions, goal, config.alpha, config.tau, scale, goal_frame);

    std::vector<ActionCommand> candidates;
    candidates.reserve(static_cast<size_t>(config.candidates_per_step));
    for (int c = 0; c < config.candidates_per_step; ++c) {
        const auto [kind, where] = pool.pick(rng.uniform_index(pool.total));
        const auto& entry = stack.entries[static_cast<size_t>(where[0])];
        candidates.push_back(decode_action(entry, where[1], where[2], kind));
    }

    // Evaluate candidates by cloned-state rollout under the cheap profile.
    const ClothSim rollout_sim(sim.mesh_ptr(), rollout_params(sim.params()));
    std::vector<double> deltas(candidates.size(), -std::numeric_limits<double>::infinity());
    const auto evaluate = [&](size_t i) {
        try {
            SimState clone = state;
            clone = rollout_sim.execute_primitive(std::move(clone), to_primitive_spec(candidates[i]));
            const RewardBreakdown after =
                reward_factorized(clone.positions, goal, config.alpha, config.tau, scale, goal_frame);
            deltas[i] =
                objective_value(after, config.objective) - objective_value(before, config.objective);
        } catch (const Error&) {
            // An unstable rollout just loses the argmax.
        }
    };

    if (config.workers > 1 && candidates.size() > 1) {
        std::vector<std::thread> pool_threads;
        std::atomic<size_t> next{0};
        const int n_threads = std::min<int>(config.workers, static_cast<int>(candidates.size()));
        for (int t = 0; t < n_threads; ++t)
            pool_threads.emplace_back([&] {
                for (size_t i = next.fetch_add(1); i < candidates.size(); i = next.fetch_add(1))
                    evaluate(i);
            });
        for (auto& th : pool_threads) th.join();
    } else {
        for (size_t i = 0; i < candidates.size(); ++i) evaluate(i);
    }

    // Ties resolve to the earliest sampled candidate.
    size_t best = 0;
    for (size_t i = 1; i < candidates.size(); ++i)
        if (deltas[i] > deltas[best]) best = i;

    GreedyStepResult result;
    result.action = candidates[best];
    result.predicted_delta = deltas[best];
    result.reward_before = before;
    result.next_state = sim.execute_primitive(state, to_primitive_spec(candidates[best]));
    result.reward_after = reward_factorized(result.next_state.positions, goal, config.alpha,
                                            config.tau, scale, goal_frame);
    result.delta = objective_value(result.reward_after, config.objective) -
                   objective_value(result.reward_before, config.objective);
    return result;
}

Eigen::Vector3d keypoint_position(const GarmentMesh& mesh, const SimState& state,
                                  const std::string& name) {
    return state.positions[static_cast<size_t>(mesh.keypoints.at(name))];
}

Eigen::Vector3d clamp_place_to_arm_length(const Eigen::Vector3d& place,
                                          const Eigen::Vector3d& shoulder, double arm_length) {
    const Eigen::Vector2d d = planar(place) - planar(shoulder);
    const double dist = d.norm();
    if (dist <= arm_length || dist < 1e-12) return place;
    const Eigen::Vector2d clamped = planar(shoulder) + d * (arm_length / dist);
    return {clamped.x(), clamped.y(), place.z()};
}

namespace {

double coverage_vs_canonical(const GarmentMesh& mesh, const VertexConfiguration& positions) {
    const Observation now = render_observation(mesh, positions, PlanarTransform::identity(), 1.0);
    const Observation ref = render_observation(mesh, mesh.vertices, PlanarTransform::identity(), 1.0);
    return coverage(now.cloth_mask, ref.cloth_mask);
}

} // namespace

SimState fold_shirt(const ClothSim& sim, SimState state) {
    const GarmentMesh& mesh = sim.mesh();
    if (mesh.category != GarmentCategory::Shirt)
        throw WrongCategory("fold_shirt: defined for shirts only");

    const double cov = coverage_vs_canonical(mesh, state.positions);
    if (cov < 0.6)
        log_warn("fold_shirt: coverage " + std::to_string(cov) +
                 " below the 0.6 keypoint-visibility threshold");

    const double arm_len = arm_length(mesh);
    const auto kp = [&](const char* name) { return keypoint_position(mesh, state, name); };

    // Step one: sleeves to the quarter and three-quarter waist points.
    {
        const Eigen::Vector3d lw = kp("left_waist"), rw = kp("right_waist");
        const Eigen::Vector3d q1 = lw + 0.25 * (rw - lw);
        const Eigen::Vector3d q3 = lw + 0.75 * (rw - lw);
        const Eigen::Vector3d place_l = clamp_place_to_arm_length(q1, kp("left_shoulder"), arm_len);
        const Eigen::Vector3d place_r = clamp_place_to_arm_length(q3, kp("right_shoulder"), arm_len);
        state = sim.execute_dual_pick_place(std::move(state), kp("left_sleeve"), place_l,
                                            kp("right_sleeve"), place_r);
    }
    // Step two: shoulders to waists.
    {
        state = sim.execute_dual_pick_place(std::move(state), kp("left_shoulder"), kp("left_waist"),
                                            kp("right_shoulder"), kp("right_waist"));
    }
    return state;
}

namespace {

// Reflect points lying on `moving`'s side of the perpendicular bisector of
// (moving -> target); everything else stays. z is preserved.
void fold_towards(VertexConfiguration& cfg, const Eigen::Vector2d& moving,
                  const Eigen::Vector2d& target) {
    const Eigen::Vector2d mid = 0.5 * (moving + target);
    Eigen::Vector2d n = target - moving;
    const double len = n.norm();
    if (len < 1e-12) return;
    n /= len;
    for (auto& p : cfg) {
        const double side = (planar(p) - mid).dot(n);
        if (side < 0.0) {
            const Eigen::Vector2d reflected = planar(p) - 2.0 * side * n;
            p.x() = reflected.x();
            p.y() = reflected.y();
        }
    }
}

} // namespace

VertexConfiguration folded_goal(const GarmentMesh& mesh) {
    if (mesh.category != GarmentCategory::Shirt)
        throw WrongCategory("folded_goal: defined for shirts only");

    VertexConfiguration cfg = mesh.vertices;
    const double arm_len = arm_length(mesh);
    const auto at = [&](const char* name) {
        return planar(mesh.vertices[static_cast<size_t>(mesh.keypoints.at(name))]);
    };

    const Eigen::Vector2d lw = at("left_waist"), rw = at("right_waist");
    const Eigen::Vector2d q1 = lw + 0.25 * (rw - lw);
    const Eigen::Vector2d q3 = lw + 0.75 * (rw - lw);
    const auto clamp2 = [&](const Eigen::Vector2d& place, const Eigen::Vector2d& shoulder) {
        return planar(clamp_place_to_arm_length({place.x(), place.y(), 0.0},
                                                {shoulder.x(), shoulder.y(), 0.0}, arm_len));
    };

    // Sleeves fold in toward the waist quarter points.
    fold_towards(cfg, at("left_sleeve"), clamp2(q1, at("left_shoulder")));
    fold_towards(cfg, at("right_sleeve"), clamp2(q3, at("right_shoulder")));

    // Top half folds down: shoulders onto waists.
    const Eigen::Vector2d mid_shoulder = 0.5 * (at("left_shoulder") + at("right_shoulder"));
    const Eigen::Vector2d mid_waist = 0.5 * (at("left_waist") + at("right_waist"));
    fold_towards(cfg, mid_shoulder, mid_waist);
    return cfg;
}

IroningSchedule ironing_schedule(const GarmentMesh& mesh, const PlanarTransform& goal,
                                 const IroningBoard& board) {
    // Shift the goal alignment sideways so that one half of the garment at
    // a time is centered over the board.
    const Eigen::Vector2d ext = planar_extents(mesh.vertices);
    const double shift = ext.x() / 4.0;
    const Eigen::Vector2d to_board = board.center;

    IroningSchedule s;
    PlanarTransform right_half_on_board = PlanarTransform::translation(
        to_board.x() - shift, to_board.y());
    PlanarTransform left_half_on_board = PlanarTransform::translation(
        to_board.x() + shift, to_board.y());
    s.alignments = {left_half_on_board.compose(goal), right_half_on_board.compose(goal)};
    return s;
}

double ironing_score(const GarmentMesh& mesh, const VertexConfiguration& positions,
                     const IroningSchedule& schedule, const IroningBoard& board) {
    // The two scheduled alignments are reached by rigid re-alignment from
    // the garment's current pose: relative transform of alignment k vs the
    // first, applied to the current positions. A vertex's material counts as
    // ironed when it sits over the board and on the top layer.
    size_t swept = 0;
    const size_t n = positions.size();
    std::vector<char> done(n, 0);

    for (const auto& align : schedule.alignments) {
        const PlanarTransform rel = align.compose(schedule.alignments[0].inverse());
        const VertexConfiguration placed =
            (&align == &schedule.alignments[0]) ? positions : apply_transform(rel, positions);
        const Observation top = render_observation(mesh, placed, PlanarTransform::identity(), 1.0);

        for (size_t i = 0; i < n; ++i) {
            if (done[i]) continue;
            const Eigen::Vector2d p = planar(placed[i]);
            if (std::abs(p.x() - board.center.x()) > board.half_extents.x() ||
                std::abs(p.y() - board.center.y()) > board.half_extents.y())
                continue;
            const Eigen::Vector2d px = top.view.world_to_pixel(p);
            const int ix = static_cast<int>(std::lround(px.x()));
            const int iy = static_cast<int>(std::lround(px.y()));
            if (ix < 0 || ix >= kObsSize || iy < 0 || iy >= kObsSize) continue;
            if (placed[i].z() < top.height_at(ix, iy) - 1e-3) continue; // buried layer
            done[i] = 1;
            ++swept;
        }
    }
    return n == 0 ? 0.0 : static_cast<double>(swept) / static_cast<double>(n);
}

} // namespace clothfit

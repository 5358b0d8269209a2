#include "clothfit/simulator.hpp"

#include "clothfit/errors.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>

namespace clothfit {

const char* primitive_name(PrimitiveKind k) {
    return k == PrimitiveKind::Fling ? "fling" : "pick_place";
}

ClothSim::ClothSim(std::shared_ptr<const GarmentMesh> mesh, SimParams params)
    : mesh_(std::move(mesh)), params_(params) {
    rest_lengths_.reserve(mesh_->springs.size());
    stiffness_.reserve(mesh_->springs.size());
    for (const auto& s : mesh_->springs) {
        rest_lengths_.push_back(s.rest_length);
        switch (s.kind) {
            case SpringKind::Structural: stiffness_.push_back(params_.k_structural); break;
            case SpringKind::Shear: stiffness_.push_back(params_.k_shear); break;
            case SpringKind::Bend: stiffness_.push_back(params_.k_bend); break;
        }
    }
    vertex_area_.assign(mesh_->vertices.size(), 0.0);
    for (const auto& t : mesh_->triangles) {
        const Eigen::Vector3d& a = mesh_->vertices[static_cast<size_t>(t[0])];
        const Eigen::Vector3d& b = mesh_->vertices[static_cast<size_t>(t[1])];
        const Eigen::Vector3d& c = mesh_->vertices[static_cast<size_t>(t[2])];
        const double area = 0.5 * ((b - a).cross(c - a)).norm();
        for (int v : t) vertex_area_[static_cast<size_t>(v)] += area / 3.0;
    }
}

SimState ClothSim::make_rest_state(uint64_t seed) const {
    SimState s;
    s.positions = mesh_->vertices;
    s.velocities.assign(s.positions.size(), Eigen::Vector3d::Zero());
    s.rng_seed = seed;
    return s;
}

void ClothSim::step(SimState& state, double dt) const {
    if (!(dt > 0.0) || dt > 5e-3) throw InvalidParams("step: dt must be in (0, 5e-3]");

    const size_t n = state.positions.size();
    const auto& springs = mesh_->springs;
    const double inv_mass = 1.0 / params_.mass_per_vertex;

    static thread_local std::vector<Eigen::Vector3d> forces;
    forces.assign(n, Eigen::Vector3d(0.0, 0.0, -params_.gravity * params_.mass_per_vertex));

    static thread_local std::vector<Eigen::Vector3d> normals;
    normals.assign(n, Eigen::Vector3d::Zero());
    for (const auto& t : mesh_->triangles) {
        const Eigen::Vector3d fn =
            (state.positions[static_cast<size_t>(t[1])] - state.positions[static_cast<size_t>(t[0])])
                .cross(state.positions[static_cast<size_t>(t[2])] -
                       state.positions[static_cast<size_t>(t[0])]);
        for (int v : t) normals[static_cast<size_t>(v)] += fn;
    }

    for (size_t si = 0; si < springs.size(); ++si) {
        const auto& s = springs[si];
        const Eigen::Vector3d d = state.positions[s.j] - state.positions[s.i];
        const double len = d.norm();
        if (len < 1e-12) continue;
        const Eigen::Vector3d dir = d / len;
        const double rel = (state.velocities[s.j] - state.velocities[s.i]).dot(dir);
        const double stretch = len - rest_lengths_[si];
        const double k = stretch < 0.0 ? stiffness_[si] * params_.compression_ratio : stiffness_[si];
        const double f = k * stretch + params_.spring_damping * rel;
        const Eigen::Vector3d fv = f * dir;
        forces[s.i] += fv;
        forces[s.j] -= fv;
    }

    const double damp = std::max(0.0, 1.0 - params_.global_damping * dt);
    for (size_t i = 0; i < n; ++i) {
        Eigen::Vector3d& v = state.velocities[i];
        Eigen::Vector3d& p = state.positions[i];
        if (vertex_area_[i] > 0.0) {
            const double nl = normals[i].norm();
            if (nl > 1e-12) {
                const Eigen::Vector3d nu = normals[i] / nl;
                const double vn = v.dot(nu);
                const Eigen::Vector3d vt = v - vn * nu;
                forces[i] -= params_.air_drag_normal * vertex_area_[i] * std::abs(vn) * vn * nu;
                forces[i] -= params_.air_drag_tangent * vertex_area_[i] * vt.norm() * vt;
            } else {
                forces[i] -= params_.air_drag_tangent * vertex_area_[i] * v.norm() * v;
            }
        }
        v = damp * (v + dt * inv_mass * forces[i]);
        const double speed = v.norm();
        if (speed > params_.max_speed_clamp) v *= params_.max_speed_clamp / speed;
        p += dt * v;

        // Ground contact: project out penetration, kill inward normal
        // velocity, Coulomb friction on the tangential part.
        if (p.z() < 0.0) {
            p.z() = 0.0;
            double normal_impulse = 0.0;
            if (v.z() < 0.0) {
                normal_impulse = -v.z();
                v.z() = 0.0;
            }
            normal_impulse += params_.gravity * dt; // support force while resting
            const double vt = std::hypot(v.x(), v.y());
            const double drop = params_.friction * normal_impulse;
            if (vt <= drop) {
                v.x() = 0.0;
                v.y() = 0.0;
            } else {
                const double f = (vt - drop) / vt;
                v.x() *= f;
                v.y() *= f;
            }
            v *= params_.contact_damping; // kills residual resting jitter
        }
    }

    // Strain limiting: clamp structural springs to strain_limit * rest.
    // Pinned vertices act as infinite mass.
    for (int it = 0; it < params_.strain_iterations; ++it) {
        bool any = false;
        for (size_t si = 0; si < springs.size(); ++si) {
            const auto& s = springs[si];
            if (s.kind != SpringKind::Structural) continue;
            const double limit = params_.strain_limit * rest_lengths_[si];
            Eigen::Vector3d d = state.positions[s.j] - state.positions[s.i];
            const double len = d.norm();
            if (len <= limit || len < 1e-12) continue;
            any = true;
            const bool pin_i = state.pinned[0] == s.i || state.pinned[1] == s.i;
            const bool pin_j = state.pinned[0] == s.j || state.pinned[1] == s.j;
            if (pin_i && pin_j) continue;
            const Eigen::Vector3d corr = (1.0 - limit / len) * d;
            if (pin_i) {
                state.positions[s.j] -= corr;
            } else if (pin_j) {
                state.positions[s.i] += corr;
            } else {
                state.positions[s.i] += 0.5 * corr;
                state.positions[s.j] -= 0.5 * corr;
            }
        }
        if (!any) break;
    }

    // Pinned vertices exactly track their grippers.
    for (int gi = 0; gi < kNumGrippers; ++gi) {
        const int vi = state.pinned[gi];
        if (vi < 0) continue;
        state.positions[static_cast<size_t>(vi)] = state.gripper_pos[gi];
        state.velocities[static_cast<size_t>(vi)] = state.gripper_vel[gi];
    }

    for (const auto& p : state.positions) {
        if (!(p.cwiseAbs().maxCoeff() <= params_.blowup_limit))
            throw NumericalBlowup("step: position diverged; reduce dt or stiffness");
    }

    state.time += dt;
}

double ClothSim::max_speed(const SimState& state) const {
    double m = 0.0;
    for (const auto& v : state.velocities) m = std::max(m, v.norm());
    return m;
}

void ClothSim::settle(SimState& state, double max_time, double speed_threshold) const {
    const double t_end = state.time + max_time;
    // A couple of steps first so a freshly released state has nonzero
    // velocities to test.
    step(state);
    while (state.time < t_end && max_speed(state) >= speed_threshold) step(state);
}

std::optional<int> ClothSim::grasp_nearest(const SimState& state, const Eigen::Vector3d& point,
                                           double radius) const {
    const Eigen::Vector2d target(point.x(), point.y());
    double top_z = -1.0;
    for (size_t i = 0; i < state.positions.size(); ++i) {
        if ((planar(state.positions[i]) - target).norm() <= radius)
            top_z = std::max(top_z, state.positions[i].z());
    }
    if (top_z < 0.0) return std::nullopt;

    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < state.positions.size(); ++i) {
        const double d = (planar(state.positions[i]) - target).norm();
        if (d > radius) continue;
        if (state.positions[i].z() < top_z - params_.grasp_layer_tol) continue; // buried layer
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(i);
        }
    }
    return best < 0 ? std::nullopt : std::optional<int>(best);
}

// Scripted gripper trajectories: moves gripper targets at a fixed speed and
// steps the simulation until each goal is reached.
struct ClothSim::Mover {
    const ClothSim& sim;
    SimState& state;
    const StepObserver& observer;

    void tick() {
        sim.step(state);
        if (observer) observer(state);
    }

    // Move a set of grippers linearly to their targets at `speed`, in lock
    // step (all arrive together).
    void move_to(std::initializer_list<std::pair<int, Eigen::Vector3d>> targets, double speed) {
        double dist = 0.0;
        for (const auto& [gi, target] : targets)
            dist = std::max(dist, (target - state.gripper_pos[gi]).norm());
        if (dist < 1e-12) return;
        const double duration = dist / speed;
        const int steps = std::max(1, static_cast<int>(std::ceil(duration / sim.params_.dt)));
        std::vector<std::pair<int, Eigen::Vector3d>> start;
        for (const auto& [gi, target] : targets) start.emplace_back(gi, state.gripper_pos[gi]);
        for (int k = 1; k <= steps; ++k) {
            const double a = static_cast<double>(k) / steps;
            size_t idx = 0;
            for (const auto& [gi, target] : targets) {
                const Eigen::Vector3d next = start[idx].second + a * (target - start[idx].second);
                state.gripper_vel[gi] = (next - state.gripper_pos[gi]) / sim.params_.dt;
                state.gripper_pos[gi] = next;
                ++idx;
            }
            tick();
        }
        for (const auto& [gi, target] : targets) state.gripper_vel[gi].setZero();
    }

    // Raise the given grippers together until the lowest cloth vertex has
    // `margin` of ground clearance. Returns the recorded cloth height.
    double lift_until_clearance(std::initializer_list<int> grippers, double margin, double speed) {
        const double z_cap = 1.2;
        double min_z = lowest_free_z();
        while (min_z < margin) {
            bool capped = true;
            const double dz = speed * sim.params_.dt;
            for (int gi : grippers) {
                if (state.gripper_pos[gi].z() >= z_cap) continue;
                capped = false;
                state.gripper_vel[gi] = Eigen::Vector3d(0, 0, speed);
                state.gripper_pos[gi].z() += dz;
            }
            if (capped) break;
            tick();
            for (int gi : grippers) state.gripper_vel[gi].setZero();
            min_z = lowest_free_z();
        }
        double grip_z = 0.0;
        int count = 0;
        for (int gi : grippers) {
            grip_z += state.gripper_pos[gi].z();
            ++count;
        }
        if (count > 0) grip_z /= count;
        return std::max(0.0, grip_z - margin);
    }

    double lowest_free_z() const {
        double z = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < state.positions.size(); ++i) {
            if (static_cast<int>(i) == state.pinned[0] || static_cast<int>(i) == state.pinned[1])
                continue;
            z = std::min(z, state.positions[i].z());
        }
        return std::isfinite(z) ? z : 0.0;
    }

    void release(int gi) {
        state.pinned[gi] = -1;
        state.gripper_vel[gi].setZero();
    }

    bool grab(int gi, const Eigen::Vector3d& at) {
        auto vi = sim.grasp_nearest(state, at);
        if (!vi) return false;
        state.pinned[gi] = *vi;
        state.gripper_pos[gi] = state.positions[static_cast<size_t>(*vi)];
        if (state.gripper_pos[gi].z() < 0.0) state.gripper_pos[gi].z() = 0.0;
        state.gripper_vel[gi].setZero();
        return true;
    }
};

void ClothSim::run_pick_place(SimState& state, const PrimitiveSpec& spec,
                              const StepObserver& observer) const {
    Mover m{*this, state, observer};
    if (!m.grab(0, spec.grasp_a)) {
        settle(state);
        return;
    }
    const double lift_z = state.gripper_pos[0].z() + spec.pp.lift;
    Eigen::Vector3d up = state.gripper_pos[0];
    up.z() = lift_z;
    m.move_to({{0, up}}, params_.lift_speed);

    const double half = params_.workspace_half - 0.05;
    Eigen::Vector3d over(std::clamp(spec.grasp_b.x(), -half, half),
                         std::clamp(spec.grasp_b.y(), -half, half), lift_z);
    m.move_to({{0, over}}, params_.move_speed);

    Eigen::Vector3d down = over;
    down.z() = 0.005;
    m.move_to({{0, down}}, params_.lift_speed);
    m.release(0);
    settle(state);
}

void ClothSim::run_fling(SimState& state, const PrimitiveSpec& spec,
                         const StepObserver& observer) const {
    Mover m{*this, state, observer};
    const bool got_a = m.grab(0, spec.grasp_a);
    // Never let both grippers pin the same vertex.
    bool got_b = m.grab(1, spec.grasp_b);
    if (got_a && got_b && state.pinned[0] == state.pinned[1]) {
        m.release(1);
        got_b = false;
    }
    if (!got_a && !got_b) {
        settle(state);
        return;
    }

    std::vector<int> arms;
    if (got_a) arms.push_back(0);
    if (got_b) arms.push_back(1);

    // Lift until the cloth has the required ground margin; the dangling
    // height is recorded to offset the final placement.
    double cloth_height = 0.0;
    if (arms.size() == 2)
        cloth_height = m.lift_until_clearance({0, 1}, spec.fling.lift_margin, params_.lift_speed);
    else
        cloth_height = m.lift_until_clearance({arms[0]}, spec.fling.lift_margin, params_.lift_speed);

    // Stretch along the gripper line until taut or at max width.
    if (arms.size() == 2) {
        const Eigen::Vector3d pa = state.gripper_pos[0], pb = state.gripper_pos[1];
        Eigen::Vector2d axis = planar(pb) - planar(pa);
        double sep = axis.norm();
        if (sep > 1e-9) {
            axis /= sep;
            const double rest_pair =
                (mesh_->vertices[static_cast<size_t>(state.pinned[0])] -
                 mesh_->vertices[static_cast<size_t>(state.pinned[1])])
                    .norm();
            const double target = std::min(spec.fling.max_stretch, 0.98 * rest_pair);
            if (target > sep) {
                const double grow = (target - sep) / 2.0;
                Eigen::Vector3d ta = pa, tb = pb;
                ta.head<2>() -= grow * axis;
                tb.head<2>() += grow * axis;
                m.move_to({{0, ta}, {1, tb}}, params_.stretch_speed);
            }
        }
    }

    // Swing forward, then descend while pulling back so the cloth lays out
    // around the grasp location.
    const Eigen::Vector3d fwd(spec.fling_dir.x(), spec.fling_dir.y(), 0.0);
    {
        std::vector<std::pair<int, Eigen::Vector3d>> fw;
        for (int gi : arms) fw.emplace_back(gi, state.gripper_pos[gi] + spec.fling.forward * fwd);
        if (arms.size() == 2)
            m.move_to({fw[0], fw[1]}, params_.fling_forward_speed);
        else
            m.move_to({fw[0]}, params_.fling_forward_speed);
    }
    {
        const double back = spec.fling.forward + cloth_height / 2.0;
        const double place_z = 0.02;
        std::vector<std::pair<int, Eigen::Vector3d>> dn;
        for (int gi : arms) {
            Eigen::Vector3d t = state.gripper_pos[gi] - back * fwd;
            t.z() = place_z;
            dn.emplace_back(gi, t);
        }
        if (arms.size() == 2)
            m.move_to({dn[0], dn[1]}, spec.fling.descend_speed);
        else
            m.move_to({dn[0]}, spec.fling.descend_speed);
    }

    for (int gi : arms) m.release(gi);
    settle(state);
}

SimState ClothSim::execute_primitive(SimState state, const PrimitiveSpec& spec,
                                     const StepObserver& observer) const {
    if (spec.kind == PrimitiveKind::Fling)
        run_fling(state, spec, observer);
    else
        run_pick_place(state, spec, observer);
    return state;
}

SimState ClothSim::execute_dual_pick_place(SimState state, const Eigen::Vector3d& pick_a,
                                           const Eigen::Vector3d& place_a,
                                           const Eigen::Vector3d& pick_b,
                                           const Eigen::Vector3d& place_b, double lift,
                                           const StepObserver& observer) const {
    Mover m{*this, state, observer};
    bool got_a = m.grab(0, pick_a);
    bool got_b = m.grab(1, pick_b);
    if (got_a && got_b && state.pinned[0] == state.pinned[1]) {
        m.release(1);
        got_b = false;
    }
    if (!got_a && !got_b) {
        settle(state);
        return state;
    }

    const double half = params_.workspace_half - 0.05;
    auto clamp_ws = [&](Eigen::Vector3d p, double z) {
        return Eigen::Vector3d(std::clamp(p.x(), -half, half), std::clamp(p.y(), -half, half), z);
    };

    std::vector<std::pair<int, Eigen::Vector3d>> up, over, down;
    if (got_a) {
        const double z = state.gripper_pos[0].z() + lift;
        up.emplace_back(0, Eigen::Vector3d(state.gripper_pos[0].x(), state.gripper_pos[0].y(), z));
        over.emplace_back(0, clamp_ws(place_a, z));
        down.emplace_back(0, clamp_ws(place_a, 0.005));
    }
    if (got_b) {
        const double z = state.gripper_pos[1].z() + lift;
        up.emplace_back(1, Eigen::Vector3d(state.gripper_pos[1].x(), state.gripper_pos[1].y(), z));
        over.emplace_back(1, clamp_ws(place_b, z));
        down.emplace_back(1, clamp_ws(place_b, 0.005));
    }

    auto run = [&](const std::vector<std::pair<int, Eigen::Vector3d>>& t, double speed) {
        if (t.size() == 2)
            m.move_to({t[0], t[1]}, speed);
        else
            m.move_to({t[0]}, speed);
    };
    run(up, params_.lift_speed);
    run(over, params_.move_speed);
    run(down, params_.lift_speed);
    if (got_a) m.release(0);
    if (got_b) m.release(1);
    settle(state);
    return state;
}

void ClothSim::teleport(SimState& state, const PlanarTransform& t) {
    for (auto& p : state.positions) p = t.apply(p);
    for (auto& v : state.velocities) {
        const Eigen::Vector2d rotated = t.linear() * Eigen::Vector2d(v.x(), v.y());
        v.x() = rotated.x();
        v.y() = rotated.y();
    }
}

} // namespace clothfit

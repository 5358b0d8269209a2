#include "clothfit/tasks.hpp"

#include "clothfit/actionmaps.hpp"
#include "clothfit/errors.hpp"
#include "clothfit/text_io.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace clothfit {

const char* difficulty_name(Difficulty d) { return d == Difficulty::Hard ? "hard" : "easy"; }
const char* split_name(Split s) { return s == Split::Train ? "train" : "test"; }

namespace {

Difficulty difficulty_from_name(std::string_view s) {
    if (s == "hard") return Difficulty::Hard;
    if (s == "easy") return Difficulty::Easy;
    throw ParseError("unknown difficulty: " + std::string(s));
}

Split split_from_name(std::string_view s) {
    if (s == "train") return Split::Train;
    if (s == "test") return Split::Test;
    throw ParseError("unknown split: " + std::string(s));
}

} // namespace

HardTaskDraw sample_hard_draw(Rng& rng, size_t vertex_count) {
    HardTaskDraw d;
    d.rotation = rng.uniform(-M_PI, M_PI);
    d.vertex = static_cast<int>(rng.uniform_index(vertex_count));
    d.drop_height = rng.uniform(0.5, 1.5);
    d.translate_dist = rng.uniform(0.0, 0.2);
    d.translate_angle = rng.uniform(0.0, 2.0 * M_PI);
    return d;
}

EasyTaskDraw sample_easy_draw(Rng& rng, size_t vertex_count) {
    EasyTaskDraw d;
    d.vertex = static_cast<int>(rng.uniform_index(vertex_count));
    d.drag_angle = rng.uniform(0.0, 2.0 * M_PI);
    d.drag_dist = rng.uniform(0.5, 1.0);
    return d;
}

PlanarTransform sample_goal_transform(Rng& rng) {
    PlanarTransform t;
    t.tx = rng.uniform(-0.3, 0.3);
    t.ty = rng.uniform(-0.3, 0.3);
    t.theta = wrap_angle(rotation_angle(static_cast<int>(rng.uniform_index(kNumRotations))));
    return t;
}

Task generate_hard(const ClothSim& sim, uint64_t seed) {
    Rng rng(seed);
    SimState state = sim.make_rest_state(seed);
    const HardTaskDraw draw = sample_hard_draw(rng, state.positions.size());

    ClothSim::teleport(state, PlanarTransform::rotation(draw.rotation));

    // Hoist a random vertex, let the rest dangle, then drop.
    state.pinned[0] = draw.vertex;
    state.gripper_pos[0] = state.positions[static_cast<size_t>(draw.vertex)];
    Eigen::Vector3d top = state.gripper_pos[0];
    top.z() = draw.drop_height;
    {
        // Reuse the primitive mover through a small local trajectory.
        const double speed = 1.5;
        const double dist = (top - state.gripper_pos[0]).norm();
        const int steps = std::max(1, static_cast<int>(std::ceil(dist / speed / sim.params().dt)));
        const Eigen::Vector3d start = state.gripper_pos[0];
        for (int k = 1; k <= steps; ++k) {
            const Eigen::Vector3d next = start + (top - start) * (static_cast<double>(k) / steps);
            state.gripper_vel[0] = (next - state.gripper_pos[0]) / sim.params().dt;
            state.gripper_pos[0] = next;
            sim.step(state);
        }
        state.gripper_vel[0].setZero();
    }
    sim.settle(state, 2.0, sim.params().settle_speed); // dangle
    state.pinned[0] = -1;
    sim.settle(state); // drop and come to rest

    ClothSim::teleport(state, PlanarTransform::translation(
                                  draw.translate_dist * std::cos(draw.translate_angle),
                                  draw.translate_dist * std::sin(draw.translate_angle)));
    sim.settle(state);

    Task task;
    task.seed = seed;
    task.difficulty = Difficulty::Hard;
    task.goal_transform = sample_goal_transform(rng);
    task.initial_positions = std::move(state.positions);
    return task;
}

Task generate_easy(const ClothSim& sim, uint64_t seed) {
    Rng rng(seed);
    SimState state = sim.make_rest_state(seed);
    const EasyTaskDraw draw = sample_easy_draw(rng, state.positions.size());

    const Eigen::Vector3d at = state.positions[static_cast<size_t>(draw.vertex)];
    PrimitiveSpec spec;
    spec.kind = PrimitiveKind::PickPlace;
    spec.grasp_a = at;
    spec.grasp_b = at + draw.drag_dist * Eigen::Vector3d(std::cos(draw.drag_angle),
                                                         std::sin(draw.drag_angle), 0.0);
    state = sim.execute_primitive(std::move(state), spec);

    Task task;
    task.seed = seed;
    task.difficulty = Difficulty::Easy;
    task.goal_transform = sample_goal_transform(rng);
    task.initial_positions = std::move(state.positions);
    return task;
}

TaskSet build_dataset(const std::vector<GarmentMesh>& train_meshes,
                      const std::vector<GarmentMesh>& test_meshes,
                      const DatasetCounts& counts, uint64_t seed,
                      const SimParams& sim_params) {
    if (counts.train < 0 || counts.test < 0)
        throw InvalidParams("build_dataset: negative task counts");
    if (counts.train_hard_fraction < 0 || counts.train_hard_fraction > 1 ||
        counts.test_hard_fraction < 0 || counts.test_hard_fraction > 1)
        throw InvalidParams("build_dataset: split fractions must be in [0, 1]");
    if (counts.train > 0 && train_meshes.empty())
        throw InsufficientMeshes("build_dataset: no train meshes");
    if (counts.test > 0 && test_meshes.empty())
        throw InsufficientMeshes("build_dataset: no test meshes");

    TaskSet set;
    set.seed = seed;
    for (const auto& m : train_meshes) {
        set.meshes.push_back(m);
        set.mesh_splits.push_back(Split::Train);
    }
    for (const auto& m : test_meshes) {
        set.meshes.push_back(m);
        set.mesh_splits.push_back(Split::Test);
    }

    std::vector<ClothSim> sims;
    sims.reserve(set.meshes.size());
    for (const auto& m : set.meshes)
        sims.emplace_back(std::make_shared<GarmentMesh>(m), sim_params);

    const auto emit = [&](Split split, int count, double hard_fraction, int mesh_lo, int mesh_hi) {
        const int hard = static_cast<int>(std::llround(hard_fraction * count));
        for (int i = 0; i < count; ++i) {
            const Difficulty diff = i < hard ? Difficulty::Hard : Difficulty::Easy;
            const uint64_t task_seed = mix_seed(seed, split_name(split), static_cast<uint64_t>(i));
            const int mesh_index =
                mesh_lo + static_cast<int>(task_seed % static_cast<uint64_t>(mesh_hi - mesh_lo));
            Task t = diff == Difficulty::Hard ? generate_hard(sims[static_cast<size_t>(mesh_index)], task_seed)
                                              : generate_easy(sims[static_cast<size_t>(mesh_index)], task_seed);
            t.split = split;
            t.mesh_index = mesh_index;
            set.tasks.push_back(std::move(t));
        }
    };

    emit(Split::Train, counts.train, counts.train_hard_fraction, 0,
         static_cast<int>(train_meshes.size()));
    emit(Split::Test, counts.test, counts.test_hard_fraction, static_cast<int>(train_meshes.size()),
         static_cast<int>(set.meshes.size()));
    return set;
}

std::string serialize_taskset(const TaskSet& set) {
    std::ostringstream out;
    out << "clothfit-taskset v1\n";
    out << "seed " << set.seed << "\n";
    out << "meshes " << set.meshes.size() << "\n";
    for (size_t i = 0; i < set.meshes.size(); ++i) {
        const std::string body = serialize_mesh(set.meshes[i]);
        out << "mesh " << i << " " << split_name(set.mesh_splits[i]) << " "
            << hex64(fnv1a64(body)) << " " << body.size() << "\n";
        out << body; // ends with newline
    }
    out << "tasks " << set.tasks.size() << "\n";
    for (const auto& t : set.tasks) {
        out << "task " << t.seed << " " << difficulty_name(t.difficulty) << " "
            << split_name(t.split) << " " << t.mesh_index << "\n";
        out << "goal " << format_double(t.goal_transform.tx) << " "
            << format_double(t.goal_transform.ty) << " " << format_double(t.goal_transform.theta)
            << " " << (t.goal_transform.mirrored ? 1 : 0) << "\n";
        out << "positions " << t.initial_positions.size() << "\n";
        for (const auto& p : t.initial_positions)
            out << format_double(p.x()) << " " << format_double(p.y()) << " "
                << format_double(p.z()) << "\n";
    }
    return out.str();
}

TaskSet parse_taskset(const std::string& text) {
    LineReader r(text);
    std::string_view line;
    if (!r.next(line) || line != "clothfit-taskset v1")
        throw ParseError("taskset: missing or unsupported header");

    const auto expect = [&](const char* what) {
        std::string_view l;
        if (!r.next(l)) throw ParseError(std::string("taskset: unexpected end reading ") + what);
        return split_ws(l);
    };

    TaskSet set;
    {
        auto toks = expect("seed");
        if (toks.size() != 2 || toks[0] != "seed") throw ParseError("taskset: expected seed line");
        set.seed = static_cast<uint64_t>(parse_int(toks[1]));
    }
    size_t n_meshes = 0;
    {
        auto toks = expect("meshes");
        if (toks.size() != 2 || toks[0] != "meshes") throw ParseError("taskset: expected meshes line");
        n_meshes = static_cast<size_t>(parse_int(toks[1]));
    }
    // Mesh bodies are length-prefixed and hash-verified.
    for (size_t i = 0; i < n_meshes; ++i) {
        auto toks = expect("mesh header");
        if (toks.size() != 5 || toks[0] != "mesh") throw ParseError("taskset: expected mesh header");
        if (static_cast<size_t>(parse_int(toks[1])) != i)
            throw ParseError("taskset: mesh index out of order");
        set.mesh_splits.push_back(split_from_name(toks[2]));
        const std::string want_hash(toks[3]);
        const size_t body_len = static_cast<size_t>(parse_int(toks[4]));

        std::string body;
        body.reserve(body_len);
        while (body.size() < body_len) {
            std::string_view l;
            if (!r.next(l)) throw ParseError("taskset: truncated mesh body");
            body.append(l);
            body.push_back('\n');
        }
        if (body.size() != body_len) throw ParseError("taskset: mesh body length mismatch");
        if (hex64(fnv1a64(body)) != want_hash)
            throw ParseError("taskset: mesh content hash mismatch");
        set.meshes.push_back(parse_mesh(body));
    }
    size_t n_tasks = 0;
    {
        auto toks = expect("tasks");
        if (toks.size() != 2 || toks[0] != "tasks") throw ParseError("taskset: expected tasks line");
        n_tasks = static_cast<size_t>(parse_int(toks[1]));
    }
    for (size_t i = 0; i < n_tasks; ++i) {
        Task t;
        {
            auto toks = expect("task header");
            if (toks.size() != 5 || toks[0] != "task") throw ParseError("taskset: expected task header");
            t.seed = static_cast<uint64_t>(parse_int(toks[1]));
            t.difficulty = difficulty_from_name(toks[2]);
            t.split = split_from_name(toks[3]);
            t.mesh_index = static_cast<int>(parse_int(toks[4]));
            if (t.mesh_index < 0 || static_cast<size_t>(t.mesh_index) >= set.meshes.size())
                throw ParseError("taskset: task mesh index out of range");
            if (set.mesh_splits[static_cast<size_t>(t.mesh_index)] != t.split)
                throw ParseError("taskset: task split does not match its mesh split");
        }
        {
            auto toks = expect("goal");
            if (toks.size() != 5 || toks[0] != "goal") throw ParseError("taskset: expected goal line");
            t.goal_transform.tx = parse_double(toks[1]);
            t.goal_transform.ty = parse_double(toks[2]);
            t.goal_transform.theta = parse_double(toks[3]);
            t.goal_transform.mirrored = parse_int(toks[4]) != 0;
        }
        {
            auto toks = expect("positions");
            if (toks.size() != 2 || toks[0] != "positions")
                throw ParseError("taskset: expected positions line");
            const size_t n = static_cast<size_t>(parse_int(toks[1]));
            if (n != set.meshes[static_cast<size_t>(t.mesh_index)].vertices.size())
                throw ParseError("taskset: position count does not match mesh");
            t.initial_positions.reserve(n);
            for (size_t k = 0; k < n; ++k) {
                auto p = expect("position");
                if (p.size() != 3) throw ParseError("taskset: malformed position line");
                t.initial_positions.emplace_back(parse_double(p[0]), parse_double(p[1]),
                                                 parse_double(p[2]));
            }
        }
        for (const auto& p : t.initial_positions)
            if (p.z() < -1e-6) throw ParseError("taskset: initial state penetrates the ground");
        set.tasks.push_back(std::move(t));
    }
    return set;
}

void save_taskset(const TaskSet& set, const std::string& path) {
    write_file(path, serialize_taskset(set));
}

TaskSet load_taskset(const std::string& path) { return parse_taskset(read_file(path)); }

VertexConfiguration goal_configuration(const GarmentMesh& mesh, const Task& task) {
    return apply_transform(task.goal_transform, mesh.vertices);
}

} // namespace clothfit

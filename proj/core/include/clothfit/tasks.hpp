#pragma once

#include "clothfit/garments.hpp"
#include "clothfit/geometry.hpp"
#include "clothfit/rng.hpp"
#include "clothfit/simulator.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace clothfit {

enum class Difficulty { Hard, Easy };
enum class Split { Train, Test };

const char* difficulty_name(Difficulty d);
const char* split_name(Split s);

struct Task {
    uint64_t seed = 0;
    Difficulty difficulty = Difficulty::Hard;
    Split split = Split::Train;
    int mesh_index = 0;
    PlanarTransform goal_transform;
    VertexConfiguration initial_positions; // settled; velocities are zero
};

// Sampled parameters behind one generated task, exposed so the samplers can
// be tested against their target distributions directly.
struct HardTaskDraw {
    double rotation = 0.0;
    int vertex = 0;
    double drop_height = 0.0;   // uniform [0.5, 1.5] m
    double translate_dist = 0.0; // uniform [0.0, 0.2] m
    double translate_angle = 0.0;
};

struct EasyTaskDraw {
    int vertex = 0;
    double drag_angle = 0.0; // uniform [0, 2*pi)
    double drag_dist = 0.0;  // uniform [0.5, 1.0] m
};

HardTaskDraw sample_hard_draw(Rng& rng, size_t vertex_count);
EasyTaskDraw sample_easy_draw(Rng& rng, size_t vertex_count);

// Goal pose: uniform position in the central 0.6 m square, rotation drawn
// from the 16 action-map angles.
PlanarTransform sample_goal_transform(Rng& rng);

// Crumpled low-coverage start: rotate, pick a random vertex, drop it from a
// random height, then translate the resting cloth.
Task generate_hard(const ClothSim& sim, uint64_t seed);

// Near-canonical start: drag a random vertex by a random angle and distance
// using a pick&place.
Task generate_easy(const ClothSim& sim, uint64_t seed);

struct DatasetCounts {
    int train = 200;
    int test = 50;
    double train_hard_fraction = 0.75;
    double test_hard_fraction = 0.5;
};

struct TaskSet {
    uint64_t seed = 0;
    std::vector<GarmentMesh> meshes;
    std::vector<Split> mesh_splits; // train meshes are disjoint from test meshes
    std::vector<Task> tasks;
};

// Deterministic, seed-indexed dataset over the given meshes. Throws
// InsufficientMeshes when train/test mesh disjointness is impossible.
TaskSet build_dataset(const std::vector<GarmentMesh>& train_meshes,
                      const std::vector<GarmentMesh>& test_meshes,
                      const DatasetCounts& counts, uint64_t seed,
                      const SimParams& sim_params = {});

std::string serialize_taskset(const TaskSet& set);
// Verifies the mesh content hashes and the train/test disjointness.
TaskSet parse_taskset(const std::string& text);
void save_taskset(const TaskSet& set, const std::string& path);
TaskSet load_taskset(const std::string& path);

// The goal configuration a task is scored against: the canonical mesh
// placed at the task's goal transform.
VertexConfiguration goal_configuration(const GarmentMesh& mesh, const Task& task);

} // namespace clothfit

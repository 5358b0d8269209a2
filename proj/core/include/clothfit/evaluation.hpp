#pragma once

#include "clothfit/planner.hpp"
#include "clothfit/tasks.hpp"

#include <optional>
#include <string>
#include <vector>

namespace clothfit {

enum class PolicyKind { Greedy, Random, FoldDemo, Teleport };

const char* policy_name(PolicyKind p);
PolicyKind policy_from_name(const std::string& name);

struct EpisodeStep {
    int step = 0;
    PrimitiveKind primitive = PrimitiveKind::PickPlace;
    Eigen::Vector3d grasp_a = Eigen::Vector3d::Zero();
    Eigen::Vector3d grasp_b = Eigen::Vector3d::Zero();
    double r_unf_before = 0, r_c_before = 0, r_a_before = 0, r_ca_before = 0;
    double r_unf_after = 0, r_c_after = 0, r_a_after = 0, r_ca_after = 0;
    double iou = 0, cov = 0;
    double predicted_delta = 0;
};

struct EpisodeResult {
    size_t task_index = 0;
    Difficulty difficulty = Difficulty::Hard;
    Split split = Split::Test;
    int mesh_index = 0;
    std::vector<EpisodeStep> steps;
    VertexConfiguration final_positions;
    double r_unf = 0, r_c = 0, r_a = 0, r_ca = 0;
    double iou_final = 0, cov_final = 0;
    int fling_count = 0, pp_count = 0;
    bool failed = false;
    std::string error;
};

struct EvalConfig {
    PolicyKind policy = PolicyKind::Greedy;
    PolicyConfig policy_config;
    uint64_t seed = 0;
    int workers = 1; // parallel episodes
    SimParams sim_params;
};

// Masks for the image metrics: identity view at scale 1.
double mask_iou(const GarmentMesh& mesh, const VertexConfiguration& current,
                const VertexConfiguration& goal);
double mask_coverage(const GarmentMesh& mesh, const VertexConfiguration& current,
                     const VertexConfiguration& goal);

EpisodeResult run_episode(const ClothSim& sim, const Task& task, size_t task_index,
                          const EvalConfig& config);

struct EvaluationReport {
    std::vector<EpisodeResult> episodes;
    // Aggregate means over non-failed episodes.
    double r_unf = 0, r_c = 0, r_a = 0, r_ca = 0, iou = 0, cov = 0;
    int failures = 0;
};

// Runs the policy over all tasks of the given split (or every task when
// split is nullopt).
EvaluationReport evaluate_taskset(const TaskSet& set, const EvalConfig& config,
                                  std::optional<Split> split = Split::Test);

// metrics.csv: schema comment, header, one row per task plus one aggregate
// row. episodes.jsonl: one line-delimited record per step. summary.txt
// mirrors the aggregate.
void write_metrics_csv(const EvaluationReport& report, const TaskSet& set, const std::string& path);
void write_episode_log(const EvaluationReport& report, const std::string& path);
void write_summary(const EvaluationReport& report, const std::string& path);

struct AblationRow {
    Objective objective;
    std::string primitives; // "fling", "pp", "both"
    double r_unf = 0, r_a = 0, r_c = 0, iou = 0, cov = 0;
    int failures = 0;
};

// Cross product {unfactorized, factorized} x {fling, pp, both} over the same
// tasks; six rows.
std::vector<AblationRow> run_ablation(const TaskSet& set, const EvalConfig& base,
                                      std::optional<Split> split = Split::Test);

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path);
std::string format_ablation_table(const std::vector<AblationRow>& rows);

} // namespace clothfit

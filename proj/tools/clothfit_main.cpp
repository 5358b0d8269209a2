// clothfit command line: dataset generation, policy evaluation and the
// reward/primitive ablation runs.

#include "clothfit/errors.hpp"
#include "clothfit/evaluation.hpp"
#include "clothfit/logging.hpp"
#include "clothfit/rng.hpp"
#include "clothfit/tasks.hpp"
#include "clothfit/text_io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>

namespace fs = std::filesystem;
using namespace clothfit;

namespace {

struct GenTasksOptions {
    std::string category = "shirt";
    int train = 200;
    int test = 50;
    double train_hard_frac = 0.75;
    double test_hard_frac = 0.5;
    int meshes_train = 3;
    int meshes_test = 2;
    double grid_pitch = 0.025;
    uint64_t seed = 0;
    std::string out = "tasks.txt";
};

// Jitter the generator dimensions so train and test meshes differ.
GarmentMesh make_variant(const std::string& category, double pitch, Rng& rng) {
    if (category == "shirt") {
        ShirtParams p;
        p.grid_pitch = pitch;
        p.body_width *= rng.uniform(0.85, 1.15);
        p.body_height *= rng.uniform(0.85, 1.1);
        p.sleeve_length *= rng.uniform(0.85, 1.15);
        p.sleeve_width *= rng.uniform(0.85, 1.15);
        return make_shirt(p);
    }
    if (category == "pants") {
        PantsParams p;
        p.grid_pitch = pitch;
        p.waist_width *= rng.uniform(0.9, 1.15);
        p.height *= rng.uniform(0.9, 1.1);
        p.leg_width *= rng.uniform(0.9, 1.1);
        return make_pants(p);
    }
    throw InvalidParams("unknown category: " + category);
}

int cmd_gen_tasks(const GenTasksOptions& opt) {
    if (opt.train > 0 && opt.meshes_train < 1)
        throw InsufficientMeshes("gen-tasks: need at least one train mesh");
    if (opt.test > 0 && opt.meshes_test < 1)
        throw InsufficientMeshes("gen-tasks: need at least one test mesh");

    std::vector<GarmentMesh> train_meshes, test_meshes;
    {
        Rng rng(mix_seed(opt.seed, "meshes", 0));
        for (int i = 0; i < opt.meshes_train; ++i)
            train_meshes.push_back(make_variant(opt.category, opt.grid_pitch, rng));
        for (int i = 0; i < opt.meshes_test; ++i)
            test_meshes.push_back(make_variant(opt.category, opt.grid_pitch, rng));
    }

    DatasetCounts counts;
    counts.train = opt.train;
    counts.test = opt.test;
    counts.train_hard_fraction = opt.train_hard_frac;
    counts.test_hard_fraction = opt.test_hard_frac;

    const TaskSet set = build_dataset(train_meshes, test_meshes, counts, opt.seed);
    save_taskset(set, opt.out);

    int hard = 0, easy = 0;
    for (const auto& t : set.tasks) (t.difficulty == Difficulty::Hard ? hard : easy)++;
    std::printf("wrote %s: %zu tasks (%d hard, %d easy), %zu meshes\n", opt.out.c_str(),
                set.tasks.size(), hard, easy, set.meshes.size());
    return 0;
}

struct EvalOptions {
    std::string task_set;
    std::string policy = "greedy";
    std::string objective = "ca";
    double alpha = kDefaultAlpha;
    double tau = kDefaultTau;
    std::string primitives = "both";
    int candidates = 64;
    int steps = 10;
    uint64_t seed = 0;
    int workers = 1;
    std::string split = "test";
    std::string out = "out";
};

EvalConfig to_eval_config(const EvalOptions& opt) {
    EvalConfig cfg;
    cfg.policy = policy_from_name(opt.policy);
    cfg.seed = opt.seed;
    cfg.workers = opt.workers;
    cfg.policy_config.alpha = opt.alpha;
    cfg.policy_config.tau = opt.tau;
    cfg.policy_config.candidates_per_step = opt.candidates;
    cfg.policy_config.max_steps = opt.steps;
    if (opt.objective == "unf")
        cfg.policy_config.objective = Objective::Unfactorized;
    else if (opt.objective == "ca")
        cfg.policy_config.objective = Objective::Factorized;
    else
        throw InvalidParams("unknown objective: " + opt.objective);
    if (opt.primitives == "fling")
        cfg.policy_config.allowed_primitives = {PrimitiveKind::Fling};
    else if (opt.primitives == "pp")
        cfg.policy_config.allowed_primitives = {PrimitiveKind::PickPlace};
    else if (opt.primitives == "both")
        cfg.policy_config.allowed_primitives = {PrimitiveKind::Fling, PrimitiveKind::PickPlace};
    else
        throw InvalidParams("unknown primitives option: " + opt.primitives);
    return cfg;
}

std::optional<Split> parse_split(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "test") return Split::Test;
    if (s == "all") return std::nullopt;
    throw InvalidParams("unknown split: " + s);
}

int cmd_evaluate(const EvalOptions& opt) {
    const TaskSet set = load_taskset(opt.task_set);
    const EvalConfig cfg = to_eval_config(opt);
    const EvaluationReport report = evaluate_taskset(set, cfg, parse_split(opt.split));

    fs::create_directories(opt.out);
    write_metrics_csv(report, set, (fs::path(opt.out) / "metrics.csv").string());
    write_episode_log(report, (fs::path(opt.out) / "episodes.jsonl").string());
    write_summary(report, (fs::path(opt.out) / "summary.txt").string());

    std::printf("evaluated %zu tasks, %d failures; mean IoU %.3f, coverage %.3f\n",
                report.episodes.size(), report.failures, report.iou, report.cov);
    return report.failures == 0 ? 0 : 1;
}

int cmd_ablate(const EvalOptions& opt) {
    const TaskSet set = load_taskset(opt.task_set);
    const EvalConfig cfg = to_eval_config(opt);
    const auto rows = run_ablation(set, cfg, parse_split(opt.split));

    fs::create_directories(opt.out);
    write_ablation_csv(rows, (fs::path(opt.out) / "ablation.csv").string());
    const std::string table = format_ablation_table(rows);
    write_file((fs::path(opt.out) / "ablation.txt").string(), table);
    std::fputs(table.c_str(), stdout);

    int failures = 0;
    for (const auto& r : rows) failures += r.failures;
    return failures == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"canonicalized-alignment toolkit for simulated garments"};
    app.require_subcommand(1);

    GenTasksOptions gen;
    auto* gen_cmd = app.add_subcommand("gen-tasks", "generate a task-set file");
    gen_cmd->add_option("--category", gen.category, "garment category (shirt|pants)");
    gen_cmd->add_option("--train", gen.train, "number of training tasks");
    gen_cmd->add_option("--test", gen.test, "number of test tasks");
    gen_cmd->add_option("--train-hard-frac", gen.train_hard_frac, "hard fraction in train");
    gen_cmd->add_option("--test-hard-frac", gen.test_hard_frac, "hard fraction in test");
    gen_cmd->add_option("--meshes-train", gen.meshes_train, "distinct train meshes");
    gen_cmd->add_option("--meshes-test", gen.meshes_test, "distinct test meshes");
    gen_cmd->add_option("--grid-pitch", gen.grid_pitch, "mesh grid pitch in meters");
    gen_cmd->add_option("--seed", gen.seed, "master seed");
    gen_cmd->add_option("--out", gen.out, "output task-set path");

    EvalOptions ev;
    auto add_eval_options = [&](CLI::App* cmd) {
        cmd->add_option("--task-set", ev.task_set, "task-set file")->required();
        cmd->add_option("--alpha", ev.alpha, "reward mixing weight");
        cmd->add_option("--tau", ev.tau, "trimming threshold (normalized)");
        cmd->add_option("--candidates", ev.candidates, "rollout candidates per step");
        cmd->add_option("--steps", ev.steps, "steps per episode");
        cmd->add_option("--seed", ev.seed, "master seed");
        cmd->add_option("--workers", ev.workers, "parallel episode workers");
        cmd->add_option("--split", ev.split, "task split (train|test|all)");
        cmd->add_option("--out", ev.out, "output directory");
    };

    auto* eval_cmd = app.add_subcommand("evaluate", "run a policy over a task set");
    add_eval_options(eval_cmd);
    eval_cmd->add_option("--policy", ev.policy, "greedy|random|fold-demo|teleport");
    eval_cmd->add_option("--objective", ev.objective, "unf|ca");
    eval_cmd->add_option("--primitives", ev.primitives, "fling|pp|both");

    auto* ablate_cmd = app.add_subcommand("ablate", "objective x primitive ablation grid");
    add_eval_options(ablate_cmd);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen_cmd->parsed()) return cmd_gen_tasks(gen);
        if (eval_cmd->parsed()) return cmd_evaluate(ev);
        if (ablate_cmd->parsed()) return cmd_ablate(ev);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

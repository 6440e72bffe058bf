#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cupid/cupid_module.hpp"
#include "cupid/data.hpp"
#include "cupid/io.hpp"
#include "cupid/metrics.hpp"
#include "cupid/nn.hpp"
#include "cupid/uncertainty.hpp"

namespace cupid {

// Written into report.json so result directories can be told apart after
// code changes.
inline constexpr const char* kVersion = "0.1.0";

enum class Task { Toy1, Toy2, Tabular, Misclass, Ood };

const char* task_name(Task t);
Task task_from_name(const std::string& name);

struct PhaseHyper {
    std::size_t epochs = 50;
    std::size_t batch_size = 16;
    double lr = 1e-3;
};

struct AblationFlags {
    bool no_max = false;
    bool separate_branches = false;
    bool mc_dropout_baseline = false;
};

struct DataConfig {
    // 1-D regression tasks
    std::size_t n_per_region = 1000;
    std::size_t n_test_per_region = 300;
    double density_ratio = 1.0;
    // blob tasks (split 80/20 into train/test)
    std::size_t classes = 3;
    std::size_t n_per_class = 400;
    std::size_t dim = 2;
    double spread = 0.5;
    double label_noise = 0.0;
    double ood_shift = 0.0;  // ood task only
};

// Full description of one experiment.  from_json starts from the task's
// defaults and applies overrides, so a config file only has to say what it
// changes.
struct ExperimentConfig {
    Task task = Task::Toy2;
    MlpSpec model;
    std::size_t insertion_layer = 2;
    std::size_t trunk_depth = 2;
    PhaseHyper base;   // host network training
    PhaseHyper cupid;  // module training
    double lambda1 = 1e-3;
    double lambda2 = 1e-2;
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    AblationFlags ablations;
    std::size_t mc_passes = 10;

    DataConfig data;

    static ExperimentConfig defaults(Task task);
    static ExperimentConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    void validate() const;
    bool is_regression() const { return task == Task::Toy1 || task == Task::Toy2; }
    std::uint64_t config_hash() const;  // FNV-1a over the canonical dump
};

// Everything produced for one seed.  Kept in memory so callers can reuse the
// trained pieces (placement sweeps, shift ladders) without retraining.
struct SeedArtifacts {
    std::uint64_t seed = 0;
    Mlp base;
    std::vector<double> base_curve;
    std::size_t split_layer = 0;
    CupidModule module;
    std::vector<double> cupid_curve;
    TensorDataset train;
    TensorDataset test;
    std::vector<ClassificationSample> ood;  // ood task only

    // Split view of the frozen base at the trained insertion layer.
    SplitNetwork split() const { return SplitNetwork(base, split_layer); }
};

struct SeedResult {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;  // diagnostic when !ok
    std::vector<UncertaintyRecord> records;
    std::vector<MetricRow> metrics;
};

struct SummaryRow {
    std::string metric;  // includes the score type in its params
    std::string params;
    double mean = 0.0;
    std::optional<double> stddev;  // only with >= 2 contributing seeds
    std::size_t n_seeds = 0;
};

struct Report {
    ExperimentConfig config;
    std::vector<SeedResult> seeds;
    std::vector<SummaryRow> summary;
};

// Deterministic sub-seeds for the independent random streams of one run.
namespace stream {
constexpr std::uint64_t kTrainData = 1;
constexpr std::uint64_t kTestData = 2;
constexpr std::uint64_t kBaseInit = 3;
constexpr std::uint64_t kBaseTrain = 4;
constexpr std::uint64_t kCupidInit = 5;
constexpr std::uint64_t kCupidTrain = 6;
constexpr std::uint64_t kSplit = 7;
constexpr std::uint64_t kLabelNoise = 8;
constexpr std::uint64_t kOodData = 9;
constexpr std::uint64_t kMcDropout = 10;
std::uint64_t derive(std::uint64_t seed, std::uint64_t which);
}  // namespace stream

// Build datasets for one seed (label noise applied, 80/20 split done).
void make_datasets(const ExperimentConfig& config, std::uint64_t seed,
                   TensorDataset& train, TensorDataset& test,
                   std::vector<ClassificationSample>* ood);

// Train base network and module for one seed.  mode selects the ablation
// branch behaviour; the base network is bit-frozen during module training
// (verified by hash, violation is a logic error).
SeedArtifacts train_pipeline(const ExperimentConfig& config, std::uint64_t seed,
                             BranchMode mode = BranchMode::Joint);

// Score the test set (plus the shifted set for the ood task, appended after
// the test rows) with the seed's trained pipeline.
std::vector<UncertaintyRecord> eval_records(const ExperimentConfig& config,
                                            const SeedArtifacts& art);

// Metrics for one evaluated seed, per score type:
//   regression: pearson / ause / uce of the score against L1 error
//   tabular, misclass: roc_auc / aurc / spearman against 0/1 errors
//   ood: roc_auc / aupr with is_ood as the positive label
std::vector<MetricRow> seed_metrics(const ExperimentConfig& config,
                                    const SeedArtifacts& art,
                                    const std::vector<UncertaintyRecord>& records);

// Full experiment: every seed through data/train/eval/metrics.  Seeds that
// die with a numeric error are reported as failed, not fatal.
Report run_experiment(const ExperimentConfig& config);

// Reuse one trained pipeline against a shifted OOD set; returns the records
// of test+shifted evaluation (test rows first).  ood task only.
std::vector<UncertaintyRecord> eval_with_shift(const ExperimentConfig& config,
                                               const SeedArtifacts& art,
                                               double magnitude);

// One full run per insertion layer.  Base training streams do not depend on
// the insertion layer, so each seed's base network is bit-identical across
// the swept layers.
struct SweepRow {
    std::size_t layer;
    SummaryRow summary;
};
std::vector<SweepRow> sweep_placement(const ExperimentConfig& config,
                                      const std::vector<std::size_t>& layers);

// Flagged ablation variants side by side with the default.  Keys are
// "default" plus one of "no_max" / "separate" / "mc_dropout".
std::map<std::string, Report> ablate(const ExperimentConfig& config);

// Dense prediction grid over [4.5, 14.5] step 0.01 for the 1-D tasks,
// evaluated with the first seed's trained pipeline.
struct GridRow {
    double x, y_hat, u_alea, u_epis;
};
std::vector<GridRow> emit_plotdata(const ExperimentConfig& config);

// File emission (all deterministic, no timestamps).
void write_report(const Report& report, const std::filesystem::path& outdir);
void write_grid_csv(const std::filesystem::path& path,
                    const std::vector<GridRow>& rows);
void write_sweep_csv(const std::filesystem::path& path,
                     const std::vector<SweepRow>& rows);

}  // namespace cupid

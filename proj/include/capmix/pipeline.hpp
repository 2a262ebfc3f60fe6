#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "capmix/config.hpp"

namespace capmix {

// Exit codes shared by the CLI and the in-process command functions.
inline constexpr int kExitOk = 0;
inline constexpr int kExitPartialFailure = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitNumericalError = 3;

// One dataset: raw (unstandardized) train/val/test splits with point labels.
struct SubsetData {
    std::string name;
    TimeSeries train, val, test;
};

// 60/20/20 split of the structural benchmark; the val and test splits carry
// injected anomalies of every kind, and `contamination` controls how many
// mislabeled anomaly segments pollute the training split.
SubsetData make_benchmark(const BenchmarkSpec& spec, uint64_t seed, const std::string& name);

// Loads every configured subset (CSV paths or the synthetic benchmark).
std::vector<SubsetData> load_subsets(const RunConfig& cfg);

// Standardized windows plus ground truth for one subset. Evaluation runs at
// window granularity (a window is anomalous when any covered point is), so
// the window-label runs are precomputed alongside the point-level segments.
struct PreparedSubset {
    std::string name;
    size_t dims = 0;
    StandardizationStats stats;
    std::vector<Window> train_windows, val_windows, test_windows;
    std::vector<Segment> val_segments, test_segments;  // point-level
    std::vector<int> val_window_truth, test_window_truth;
    size_t val_len = 0, test_len = 0;
};

// Standardizes with stats computed from the training split, or with the
// supplied (checkpoint) stats when given.
PreparedSubset prepare_subset(const SubsetData& data, const WindowConfig& window_cfg,
                              const std::optional<StandardizationStats>& stats = std::nullopt);

// Per-subset evaluation record and the weighted aggregate.
struct SubsetReport {
    std::string name;
    double tau = 0.0;
    RpaCounts counts;
    Prf prf;
    size_t anomaly_count = 0;  // e_i: true segments in the test split
    int ucr_top1_hit = -1;     // -1 when not applicable (segment count != 1)
};

struct EvalReport {
    std::vector<SubsetReport> subsets;
    RpaCounts totals;
    double f1 = 0.0;         // Eq.-style weighted aggregate
    double precision = 0.0;  // same weighting, for experiment tables
    double recall = 0.0;
};

nlohmann::json eval_report_to_json(const EvalReport& report);

// Command entry points. Each returns an exit code and reports errors on
// stderr instead of throwing.
int cmd_synth(const SynthConfig& cfg, const std::string& out_dir);
int cmd_inject(const std::string& data_csv, const WindowConfig& window_cfg,
               const AugmentConfig& aug_cfg, uint64_t seed, const std::string& out_dir);
int cmd_train(const RunConfig& cfg, bool resume = false);
int cmd_score(const std::string& checkpoint_path, const std::string& data_csv,
              const std::string& out_csv, double tau);
int cmd_eval(const RunConfig& cfg, bool use_ras = false);
int cmd_experiment(const ExperimentManifest& manifest, const std::string& out_dir, int workers);

// Library-level pipeline used by the commands and the experiment grid; throws
// on failure.
void run_training(const RunConfig& cfg, bool resume);
EvalReport run_eval(const RunConfig& cfg, bool use_ras);

}  // namespace capmix

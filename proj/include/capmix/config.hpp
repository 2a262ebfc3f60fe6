#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "capmix/augment.hpp"
#include "capmix/evalkit.hpp"
#include "capmix/model.hpp"
#include "capmix/synthgen.hpp"
#include "capmix/ts_core.hpp"

namespace capmix {

// Built-in correlated benchmark generated on the fly from the run seed.
struct BenchmarkSpec {
    size_t length = 20000;
    size_t dims = 2;
    double noise_std = 0.1;
    double contamination = 0.0;  // multiplier on mislabeled anomalies in the training split
};

struct DataSubsetConfig {
    std::string name;
    std::optional<BenchmarkSpec> synthetic;
    std::string train_csv, val_csv, test_csv;  // used when synthetic is absent
};

struct RunConfig {
    int schema_version = 1;
    uint64_t seed = 1;
    std::string out_dir;
    std::string variant = "capmix";
    std::vector<DataSubsetConfig> subsets;
    WindowConfig window;
    AugmentConfig augment;  // min_patch/trend_dims 0 mean "derive from window/dims"
    RevisionConfig revision;
    MixupConfig mixup;
    EncoderConfig encoder;
    ProjectorConfig projector;
    TrainConfig train;
    ThresholdConfig threshold;
};

// Strict parse: unknown keys anywhere are rejected.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);
nlohmann::json run_config_to_json(const RunConfig& cfg);

// Maps an ablation variant onto the config:
//   cap        gamma forced to 1, mixup disabled
//   cap-gamma  mixup disabled
//   cap-mix    gamma forced to 1
//   capmix     unchanged
void apply_variant(RunConfig& cfg, const std::string& variant);

// min_patch = ceil(t/4) and trend_dims = ceil(d/2) when left at 0.
AugmentConfig resolve_augment(const AugmentConfig& cfg, size_t window_len, size_t dims);

struct ExperimentManifest {
    std::vector<std::string> variants;
    std::vector<uint64_t> seeds;
    std::vector<double> contamination{0.0};
    RunConfig base;
};

ExperimentManifest experiment_manifest_from_json(const nlohmann::json& j);
ExperimentManifest load_experiment_manifest(const std::string& path);

// cmd_synth input: a full generator description plus anomalies to inject.
struct SynthConfig {
    GeneratorConfig generator;
    std::vector<GtAnomalySpec> anomalies;
};

SynthConfig synth_config_from_json(const nlohmann::json& j);
SynthConfig load_synth_config(const std::string& path);
nlohmann::json synth_config_to_json(const SynthConfig& cfg);

}  // namespace capmix

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "capmix/config.hpp"
#include "capmix/pipeline.hpp"

namespace {

// Applies the global overrides shared by train/eval/experiment.
void apply_overrides(capmix::RunConfig& cfg, const std::optional<uint64_t>& seed,
                     const std::string& out_dir) {
    if (seed) cfg.seed = *seed;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CAPMix time-series anomaly detection pipeline"};
    app.require_subcommand(1);

    std::string config_path, out_dir, data_csv, checkpoint_path, manifest_path, out_csv;
    std::optional<uint64_t> seed;
    int workers = 2;
    bool resume = false;
    bool use_ras = false;
    double tau = 0.5;
    capmix::WindowConfig window_cfg;
    capmix::AugmentConfig aug_cfg;
    aug_cfg.min_patch = 0;   // auto
    aug_cfg.trend_dims = 0;  // auto

    app.add_option("--seed", seed, "Override the configured seed");
    app.add_option("--out", out_dir, "Override the configured output directory");
    app.add_option("--workers", workers, "Parallel experiment cells");

    auto* synth = app.add_subcommand("synth", "Generate a synthetic series with ground truth");
    synth->add_option("--config", config_path, "Generator config JSON")->required();

    auto* inject = app.add_subcommand("inject", "CutAddPaste a windowed CSV corpus");
    inject->add_option("--data", data_csv, "Input series CSV")->required();
    inject->add_option("--window-len", window_cfg.length, "Window length");
    inject->add_option("--stride", window_cfg.stride, "Window stride");
    inject->add_option("--min-patch", aug_cfg.min_patch, "Minimum patch length (0 = t/4)");
    inject->add_option("--trend-bound", aug_cfg.trend_bound, "Trend slope bound");
    inject->add_option("--trend-dims", aug_cfg.trend_dims, "Dims receiving trend (0 = d/2)");
    inject->add_option("--anomaly-ratio", aug_cfg.anomaly_ratio, "Pseudo-anomaly ratio");

    auto* train = app.add_subcommand("train", "Train the model per the run config");
    train->add_option("--config", config_path, "Run config JSON")->required();
    train->add_flag("--resume", resume, "Continue from an existing checkpoint");

    auto* score = app.add_subcommand("score", "Score a series CSV with a checkpoint");
    score->add_option("--checkpoint", checkpoint_path, "Checkpoint JSON")->required();
    score->add_option("--data", data_csv, "Input series CSV")->required();
    score->add_option("--scores", out_csv, "Output scores CSV")->required();
    score->add_option("--tau", tau, "Raw-probability prediction threshold");

    auto* eval = app.add_subcommand("eval", "Evaluate checkpoints per the run config");
    eval->add_option("--config", config_path, "Run config JSON")->required();
    eval->add_flag("--ras", use_ras, "Score with the random baseline instead of a checkpoint");

    auto* experiment = app.add_subcommand("experiment", "Run a variant/seed/contamination grid");
    experiment->add_option("--manifest", manifest_path, "Experiment manifest JSON")->required();

    // let --seed/--out/--workers appear after the subcommand name
    for (CLI::App* sub : {synth, inject, train, score, eval, experiment}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? capmix::kExitOk : capmix::kExitConfigError;
    }

    try {
        if (synth->parsed()) {
            const auto cfg = capmix::load_synth_config(config_path);
            if (out_dir.empty()) {
                std::cerr << "error: synth requires --out\n";
                return capmix::kExitConfigError;
            }
            return capmix::cmd_synth(cfg, out_dir);
        }
        if (inject->parsed()) {
            if (out_dir.empty()) {
                std::cerr << "error: inject requires --out\n";
                return capmix::kExitConfigError;
            }
            return capmix::cmd_inject(data_csv, window_cfg, aug_cfg, seed.value_or(1), out_dir);
        }
        if (train->parsed()) {
            auto cfg = capmix::load_run_config(config_path);
            apply_overrides(cfg, seed, out_dir);
            return capmix::cmd_train(cfg, resume);
        }
        if (score->parsed()) {
            return capmix::cmd_score(checkpoint_path, data_csv, out_csv, tau);
        }
        if (eval->parsed()) {
            auto cfg = capmix::load_run_config(config_path);
            apply_overrides(cfg, seed, out_dir);
            return capmix::cmd_eval(cfg, use_ras);
        }
        if (experiment->parsed()) {
            const auto manifest = capmix::load_experiment_manifest(manifest_path);
            if (out_dir.empty()) {
                std::cerr << "error: experiment requires --out\n";
                return capmix::kExitConfigError;
            }
            return capmix::cmd_experiment(manifest, out_dir, workers);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return capmix::kExitConfigError;
    }
    return capmix::kExitConfigError;
}

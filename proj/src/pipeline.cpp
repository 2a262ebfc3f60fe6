#include "capmix/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "capmix/log.hpp"

namespace capmix {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kCheckpointFormat = "capmix-checkpoint-v1";

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    json j;
    in >> j;
    return j;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path);
}

void write_json_file(const std::string& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

// Benchmark internals: one driving channel, correlated rows, one cycle per
// 32 samples.
GeneratorConfig benchmark_generator(const BenchmarkSpec& spec, size_t length, uint64_t seed) {
    GeneratorConfig cfg = default_generator_config(length, spec.dims);
    cfg.noise_std = spec.noise_std;
    cfg.seed = seed;
    cfg.season.omega = 1.0;
    cfg.season.period = 32;
    cfg.shapelet.mixing = Matrix(spec.dims, spec.dims);
    cfg.shapelet.mixing.at(0, 0) = 1.0;
    for (size_t r = 1; r < spec.dims; ++r) {
        cfg.shapelet.mixing.at(r, 0) = (r % 2 == 1) ? 0.5 : -0.6;
        cfg.shapelet.offset[r] = static_cast<double>(r);
    }
    return cfg;
}

std::vector<GtAnomalySpec> benchmark_anomalies(size_t split_len, size_t count, Rng& rng) {
    static constexpr AnomalyKind kKinds[] = {AnomalyKind::Shape,  AnomalyKind::Correlation,
                                             AnomalyKind::Seasonal, AnomalyKind::Trend,
                                             AnomalyKind::Global, AnomalyKind::Contextual};
    std::vector<GtAnomalySpec> specs;
    if (count == 0) return specs;
    const size_t slot = split_len / count;
    if (slot < 16) throw std::invalid_argument("benchmark: split too short for anomaly count");
    for (size_t i = 0; i < count; ++i) {
        GtAnomalySpec spec;
        spec.kind = kKinds[i % 6];
        const bool pointwise =
            spec.kind == AnomalyKind::Global || spec.kind == AnomalyKind::Contextual;
        spec.length = pointwise ? 1 : std::min<size_t>(128, slot / 3);
        const size_t margin = slot / 4;
        const size_t jitter_room = slot - margin - spec.length > margin
                                       ? slot - margin - spec.length - margin
                                       : 1;
        spec.start = i * slot + margin +
                     static_cast<size_t>(rng.below(static_cast<uint64_t>(jitter_room)));
        switch (spec.kind) {
            case AnomalyKind::Shape: spec.magnitude = 1.0; break;
            case AnomalyKind::Correlation: spec.magnitude = 1.0; break;
            case AnomalyKind::Seasonal: spec.magnitude = 2.0; break;
            case AnomalyKind::Trend: spec.magnitude = 4.0; break;
            case AnomalyKind::Global: spec.magnitude = 4.0; break;
            case AnomalyKind::Contextual: spec.magnitude = 3.5; break;
        }
        specs.push_back(spec);
    }
    return specs;
}

}  // namespace

SubsetData make_benchmark(const BenchmarkSpec& spec, uint64_t seed, const std::string& name) {
    if (spec.length < 100) throw std::invalid_argument("benchmark: length must be >= 100");
    const size_t train_len = spec.length * 6 / 10;
    const size_t val_len = spec.length * 2 / 10;
    const size_t test_len = spec.length - train_len - val_len;

    SubsetData data;
    data.name = name;

    const GeneratorConfig train_cfg = benchmark_generator(spec, train_len, mix_seed(seed, 0));
    const GeneratorConfig val_cfg = benchmark_generator(spec, val_len, mix_seed(seed, 1));
    const GeneratorConfig test_cfg = benchmark_generator(spec, test_len, mix_seed(seed, 2));

    data.train = generate(train_cfg);
    data.val = generate(val_cfg);
    data.test = generate(test_cfg);
    data.train.name = name + ".train";
    data.val.name = name + ".val";
    data.test.name = name + ".test";

    Rng placement(mix_seed(seed, 3));
    const auto val_specs = benchmark_anomalies(val_len, 12, placement);
    const auto test_specs = benchmark_anomalies(test_len, 12, placement);
    data.val = inject_ground_truth(data.val, val_specs, val_cfg, mix_seed(seed, 4));
    data.test = inject_ground_truth(data.test, test_specs, test_cfg, mix_seed(seed, 5));

    const size_t contam_count =
        static_cast<size_t>(std::llround(spec.contamination * 3.0));
    if (contam_count > 0) {
        const auto train_specs = benchmark_anomalies(train_len, contam_count, placement);
        data.train = inject_ground_truth(data.train, train_specs, train_cfg, mix_seed(seed, 6));
        data.train.labels = std::vector<int>(train_len, 0);  // contamination is mislabeled
    }
    return data;
}

std::vector<SubsetData> load_subsets(const RunConfig& cfg) {
    std::vector<SubsetData> out;
    for (size_t i = 0; i < cfg.subsets.size(); ++i) {
        const auto& sub = cfg.subsets[i];
        if (sub.synthetic) {
            out.push_back(make_benchmark(*sub.synthetic, mix_seed(cfg.seed, i, 7), sub.name));
        } else {
            SubsetData data;
            data.name = sub.name;
            data.train = read_series_csv(sub.train_csv);
            data.val = read_series_csv(sub.val_csv);
            data.test = read_series_csv(sub.test_csv);
            out.push_back(std::move(data));
        }
    }
    return out;
}

PreparedSubset prepare_subset(const SubsetData& data, const WindowConfig& window_cfg,
                              const std::optional<StandardizationStats>& stats_in) {
    PreparedSubset prep;
    prep.name = data.name;
    prep.dims = data.train.dims();
    if (data.val.dims() != prep.dims || data.test.dims() != prep.dims)
        throw std::invalid_argument("prepare_subset: split dimensionality mismatch");

    auto [train_std, stats] = standardize(data.train, stats_in);
    prep.stats = stats;
    const TimeSeries val_std = standardize(data.val, stats).first;
    const TimeSeries test_std = standardize(data.test, stats).first;

    prep.train_windows = slide_windows(train_std, window_cfg);
    prep.val_windows = slide_windows(val_std, window_cfg);
    prep.test_windows = slide_windows(test_std, window_cfg);
    if (data.val.labels) prep.val_segments = anomaly_segments(*data.val.labels);
    if (data.test.labels) prep.test_segments = anomaly_segments(*data.test.labels);
    prep.val_window_truth.resize(prep.val_windows.size());
    for (size_t i = 0; i < prep.val_windows.size(); ++i)
        prep.val_window_truth[i] = prep.val_windows[i].label > 0.0 ? 1 : 0;
    prep.test_window_truth.resize(prep.test_windows.size());
    for (size_t i = 0; i < prep.test_windows.size(); ++i)
        prep.test_window_truth[i] = prep.test_windows[i].label > 0.0 ? 1 : 0;
    prep.val_len = data.val.length();
    prep.test_len = data.test.length();
    return prep;
}

// ---------------------------------------------------------------------------
// training command
// ---------------------------------------------------------------------------

namespace {

std::string subset_dir(const RunConfig& cfg, const std::string& name) {
    return cfg.out_dir + "/subsets/" + name;
}

json config_for_compare(const RunConfig& cfg) {
    json j = run_config_to_json(cfg);
    j.erase("out_dir");
    j["train"].erase("epochs");
    return j;
}

void append_loss_history(const std::string& path, const TrainResult& result, bool fresh) {
    std::ofstream out(path, fresh ? std::ios::trunc : std::ios::app);
    if (!out) throw std::runtime_error("cannot write " + path);
    if (fresh) out << "epoch,train_loss,val_loss\n";
    for (size_t i = 0; i < result.train_loss.size(); ++i) {
        out << (result.first_epoch + static_cast<int>(i)) << ','
            << format_double(result.train_loss[i]) << ',';
        if (i < result.val_loss.size()) out << format_double(result.val_loss[i]);
        out << "\n";
    }
}

}  // namespace

void run_training(const RunConfig& cfg, bool resume) {
    if (cfg.out_dir.empty()) throw std::invalid_argument("train: out_dir is required");
    fs::create_directories(cfg.out_dir);
    write_json_file(cfg.out_dir + "/resolved_config.json", run_config_to_json(cfg));

    const auto subsets = load_subsets(cfg);
    for (size_t idx = 0; idx < subsets.size(); ++idx) {
        const auto prep = prepare_subset(subsets[idx], cfg.window);
        const AugmentConfig aug = resolve_augment(cfg.augment, cfg.window.length, prep.dims);

        const std::string dir = subset_dir(cfg, prep.name);
        fs::create_directories(dir);
        const std::string ckpt_path = dir + "/checkpoint.json";
        const std::string loss_path = dir + "/loss_history.csv";

        TrainConfig tc = cfg.train;
        tc.seed = mix_seed(cfg.seed, idx, 1);

        std::optional<CapmixModel> model;
        TrainerState state;
        bool fresh = true;
        if (resume && fs::exists(ckpt_path)) {
            const json ckpt = load_json_file(ckpt_path);
            if (ckpt.at("format").get<std::string>() != kCheckpointFormat)
                throw std::invalid_argument("resume: unknown checkpoint format");
            if (ckpt.at("config").dump() != config_for_compare(cfg).dump())
                throw std::invalid_argument(
                    "resume: checkpoint was produced by a different configuration");
            model.emplace(model_from_state_json(ckpt.at("model")));
            state = TrainerState::from_json(ckpt.at("trainer"));
            fresh = false;
        } else {
            model.emplace(prep.dims, cfg.window.length, cfg.encoder, cfg.projector,
                          mix_seed(cfg.seed, idx, 0));
        }

        const TrainResult result =
            train_model(*model, prep.train_windows, prep.val_windows, aug, cfg.revision,
                        cfg.mixup, tc, &state);
        append_loss_history(loss_path, result, fresh);

        json ckpt;
        ckpt["format"] = kCheckpointFormat;
        ckpt["subset"] = prep.name;
        ckpt["window"] = {{"length", cfg.window.length}, {"stride", cfg.window.stride}};
        ckpt["standardization"] = {{"mean", prep.stats.mean}, {"stddev", prep.stats.stddev}};
        ckpt["config"] = config_for_compare(cfg);
        ckpt["model"] = model->state_to_json();
        ckpt["trainer"] = state.to_json();
        write_json_file(ckpt_path, ckpt);
        log_info("trained subset '" + prep.name + "' (" +
                 std::to_string(state.epochs_done) + " epochs)");
    }
}

// ---------------------------------------------------------------------------
// evaluation command
// ---------------------------------------------------------------------------

namespace {

void write_scores_csv(const std::string& path, const std::vector<Window>& windows,
                      const std::vector<double>& scores, const std::vector<int>& predictions) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "window_start,score,prediction\n";
    for (size_t i = 0; i < windows.size(); ++i)
        out << windows[i].start << ',' << format_double(scores[i]) << ',' << predictions[i]
            << "\n";
}

}  // namespace

EvalReport run_eval(const RunConfig& cfg, bool use_ras) {
    if (cfg.out_dir.empty()) throw std::invalid_argument("eval: out_dir is required");
    const auto subsets = load_subsets(cfg);

    EvalReport report;
    std::vector<double> f1s, precisions, recalls, weights;
    for (size_t idx = 0; idx < subsets.size(); ++idx) {
        const std::string dir = subset_dir(cfg, subsets[idx].name);
        fs::create_directories(dir);

        std::optional<CapmixModel> model;
        std::optional<StandardizationStats> ckpt_stats;
        if (!use_ras) {
            const std::string ckpt_path = dir + "/checkpoint.json";
            if (!fs::exists(ckpt_path))
                throw std::invalid_argument("eval: missing checkpoint " + ckpt_path);
            const json ckpt = load_json_file(ckpt_path);
            if (ckpt.at("format").get<std::string>() != kCheckpointFormat)
                throw std::invalid_argument("eval: unknown checkpoint format");
            const auto wlen = ckpt.at("window").at("length").get<size_t>();
            if (wlen != cfg.window.length)
                throw std::invalid_argument("eval: checkpoint window length mismatch");
            model.emplace(model_from_state_json(ckpt.at("model")));
            StandardizationStats stats;
            stats.mean = ckpt.at("standardization").at("mean").get<std::vector<double>>();
            stats.stddev = ckpt.at("standardization").at("stddev").get<std::vector<double>>();
            ckpt_stats = std::move(stats);
        }

        const auto prep = prepare_subset(subsets[idx], cfg.window, ckpt_stats);
        std::vector<double> val_scores, test_scores;
        if (use_ras) {
            val_scores = ras_baseline(prep.val_windows.size(), mix_seed(cfg.seed, idx, 100));
            test_scores = ras_baseline(prep.test_windows.size(), mix_seed(cfg.seed, idx, 101));
        } else {
            if (model->input_dims() != prep.dims)
                throw std::invalid_argument("eval: checkpoint dimensionality mismatch");
            val_scores = score_windows(*model, prep.val_windows);
            test_scores = score_windows(*model, prep.test_windows);
        }

        // RPA at window granularity: window ordinals are the time axis
        std::vector<size_t> val_ordinals(prep.val_windows.size());
        for (size_t i = 0; i < val_ordinals.size(); ++i) val_ordinals[i] = i;
        std::vector<size_t> test_ordinals(prep.test_windows.size());
        for (size_t i = 0; i < test_ordinals.size(); ++i) test_ordinals[i] = i;
        const auto val_runs = anomaly_segments(prep.val_window_truth);
        const auto test_runs = anomaly_segments(prep.test_window_truth);

        const auto val_z = zscore_scores(val_scores);
        const auto test_z = zscore_scores(test_scores);
        const auto chosen = threshold_search(val_z, val_ordinals, 1, val_runs,
                                             prep.val_windows.size(), cfg.threshold);
        const auto predictions = detect(test_z, chosen.tau);
        const auto counts =
            rpa_counts(predictions, test_ordinals, 1, test_runs, prep.test_windows.size());
        const Prf prf = prf_from_counts(counts);

        SubsetReport sr;
        sr.name = prep.name;
        sr.tau = chosen.tau;
        sr.counts = counts;
        sr.prf = prf;
        sr.anomaly_count = prep.test_segments.size();
        if (prep.test_segments.size() == 1) {
            std::vector<size_t> point_starts(prep.test_windows.size());
            for (size_t i = 0; i < point_starts.size(); ++i)
                point_starts[i] = prep.test_windows[i].start;
            sr.ucr_top1_hit = ucr_top1(test_scores, point_starts, cfg.window.length,
                                       prep.test_segments)
                                  ? 1
                                  : 0;
        }
        report.subsets.push_back(sr);

        report.totals.tp += counts.tp;
        report.totals.fp += counts.fp;
        report.totals.fn += counts.fn;
        f1s.push_back(prf.f1);
        precisions.push_back(prf.precision);
        recalls.push_back(prf.recall);
        weights.push_back(static_cast<double>(sr.anomaly_count));

        write_scores_csv(dir + "/scores.csv", prep.test_windows, test_scores, predictions);
    }

    report.f1 = weighted_f1(f1s, weights);
    report.precision = weighted_f1(precisions, weights);
    report.recall = weighted_f1(recalls, weights);
    return report;
}

json eval_report_to_json(const EvalReport& report) {
    json subsets = json::array();
    for (const auto& s : report.subsets) {
        json e = {{"name", s.name},
                  {"tau", s.tau},
                  {"counts", {{"tp", s.counts.tp}, {"fp", s.counts.fp}, {"fn", s.counts.fn}}},
                  {"precision", s.prf.precision},
                  {"recall", s.prf.recall},
                  {"f1", s.prf.f1},
                  {"anomaly_count", s.anomaly_count}};
        if (s.ucr_top1_hit >= 0)
            e["ucr_top1"] = s.ucr_top1_hit == 1;
        else
            e["ucr_top1"] = nullptr;
        subsets.push_back(std::move(e));
    }
    return {{"schema_version", 1},
            {"f1", report.f1},
            {"precision", report.precision},
            {"recall", report.recall},
            {"counts",
             {{"tp", report.totals.tp}, {"fp", report.totals.fp}, {"fn", report.totals.fn}}},
            {"subsets", std::move(subsets)}};
}

// ---------------------------------------------------------------------------
// command wrappers
// ---------------------------------------------------------------------------

namespace {

int guard(const std::function<void()>& body) {
    try {
        body();
        return kExitOk;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumericalError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    }
}

}  // namespace

int cmd_synth(const SynthConfig& cfg, const std::string& out_dir) {
    return guard([&] {
        if (out_dir.empty()) throw std::invalid_argument("synth: out_dir is required");
        fs::create_directories(out_dir);
        TimeSeries series = generate(cfg.generator);
        if (!cfg.anomalies.empty())
            series = inject_ground_truth(series, cfg.anomalies, cfg.generator,
                                         mix_seed(cfg.generator.seed, 11));
        write_series_csv(series, out_dir + "/series.csv");
        write_json_file(out_dir + "/spec.json", synth_config_to_json(cfg));
    });
}

int cmd_inject(const std::string& data_csv, const WindowConfig& window_cfg,
               const AugmentConfig& aug_cfg, uint64_t seed, const std::string& out_dir) {
    return guard([&] {
        if (out_dir.empty()) throw std::invalid_argument("inject: out_dir is required");
        fs::create_directories(out_dir);
        const TimeSeries raw = read_series_csv(data_csv);
        const TimeSeries series = standardize(raw).first;
        const auto windows = slide_windows(series, window_cfg);
        const AugmentConfig aug = resolve_augment(aug_cfg, window_cfg.length, series.dims());
        Rng rng(seed);
        const AugmentedBatch batch = cutaddpaste_batch(windows, aug, rng);

        std::ofstream out(out_dir + "/windows.csv");
        if (!out) throw std::runtime_error("cannot write " + out_dir + "/windows.csv");
        out << "window,offset";
        for (size_t c = 0; c < series.dims(); ++c) out << ",dim_" << c;
        out << ",label\n";
        for (size_t w = 0; w < batch.windows.size(); ++w) {
            const auto& win = batch.windows[w];
            for (size_t r = 0; r < win.data.rows; ++r) {
                out << w << ',' << r;
                for (size_t c = 0; c < win.data.cols; ++c)
                    out << ',' << format_double(win.data.at(r, c));
                out << ',' << format_double(win.label) << "\n";
            }
        }

        json plans = json::array();
        for (size_t w = 0; w < batch.plans.size(); ++w) {
            const auto& p = batch.plans[w];
            plans.push_back({{"window", w},
                             {"origin", batch.origins[w]},
                             {"source", p.source_index},
                             {"length", p.length},
                             {"cut_pos", p.cut_pos},
                             {"paste_pos", p.paste_pos},
                             {"dims", p.dims},
                             {"slopes", p.slopes}});
        }
        write_json_file(out_dir + "/plans.json",
                        {{"seed", seed},
                         {"window", {{"length", window_cfg.length}, {"stride", window_cfg.stride}}},
                         {"augment",
                          {{"min_patch", aug.min_patch},
                           {"trend_bound", aug.trend_bound},
                           {"trend_dims", aug.trend_dims},
                           {"anomaly_ratio", aug.anomaly_ratio}}},
                         {"plans", std::move(plans)}});
    });
}

int cmd_train(const RunConfig& cfg, bool resume) {
    return guard([&] { run_training(cfg, resume); });
}

int cmd_score(const std::string& checkpoint_path, const std::string& data_csv,
              const std::string& out_csv, double tau) {
    return guard([&] {
        const json ckpt = load_json_file(checkpoint_path);
        if (ckpt.at("format").get<std::string>() != kCheckpointFormat)
            throw std::invalid_argument("score: unknown checkpoint format");
        CapmixModel model = model_from_state_json(ckpt.at("model"));
        StandardizationStats stats;
        stats.mean = ckpt.at("standardization").at("mean").get<std::vector<double>>();
        stats.stddev = ckpt.at("standardization").at("stddev").get<std::vector<double>>();
        WindowConfig wcfg;
        wcfg.length = ckpt.at("window").at("length").get<size_t>();
        wcfg.stride = ckpt.at("window").at("stride").get<size_t>();

        const TimeSeries raw = read_series_csv(data_csv);
        const TimeSeries series = standardize(raw, stats).first;
        const auto windows = slide_windows(series, wcfg);
        const auto scores = score_windows(model, windows);
        std::vector<int> preds(scores.size());
        for (size_t i = 0; i < scores.size(); ++i) preds[i] = scores[i] > tau ? 1 : 0;
        write_scores_csv(out_csv, windows, scores, preds);
    });
}

int cmd_eval(const RunConfig& cfg, bool use_ras) {
    return guard([&] {
        const EvalReport report = run_eval(cfg, use_ras);
        fs::create_directories(cfg.out_dir);
        write_json_file(cfg.out_dir + (use_ras ? "/metrics_ras.json" : "/metrics.json"),
                        eval_report_to_json(report));
    });
}

// ---------------------------------------------------------------------------
// experiment grid
// ---------------------------------------------------------------------------

namespace {

struct Cell {
    std::string variant;
    uint64_t seed = 0;
    double contamination = 0.0;
};

struct CellResult {
    bool ok = false;
    std::string message;
    double f1 = 0.0, precision = 0.0, recall = 0.0;
};

std::string cell_dir_name(const Cell& cell) {
    return cell.variant + "-s" + std::to_string(cell.seed) + "-c" +
           format_double(cell.contamination);
}

CellResult run_cell(const ExperimentManifest& manifest, const Cell& cell,
                    const std::string& out_dir) {
    CellResult result;
    try {
        RunConfig cfg = manifest.base;
        apply_variant(cfg, cell.variant);
        cfg.seed = cell.seed;
        for (auto& sub : cfg.subsets)
            if (sub.synthetic) sub.synthetic->contamination = cell.contamination;
        cfg.out_dir = out_dir + "/cells/" + cell_dir_name(cell);
        run_training(cfg, false);
        const EvalReport report = run_eval(cfg, false);
        write_json_file(cfg.out_dir + "/metrics.json", eval_report_to_json(report));
        result.ok = true;
        result.f1 = report.f1;
        result.precision = report.precision;
        result.recall = report.recall;
    } catch (const std::exception& e) {
        result.message = e.what();
    }
    return result;
}

void mean_std(const std::vector<double>& xs, double& mean, double& std_dev) {
    mean = 0.0;
    std_dev = 0.0;
    if (xs.empty()) return;
    for (double v : xs) mean += v;
    mean /= static_cast<double>(xs.size());
    double sq = 0.0;
    for (double v : xs) sq += (v - mean) * (v - mean);
    std_dev = std::sqrt(sq / static_cast<double>(xs.size()));
}

}  // namespace

int cmd_experiment(const ExperimentManifest& manifest, const std::string& out_dir, int workers) {
    int exit_code = kExitOk;
    const int guard_code = guard([&] {
        if (out_dir.empty()) throw std::invalid_argument("experiment: out_dir is required");
        fs::create_directories(out_dir);

        std::vector<Cell> cells;
        for (const auto& variant : manifest.variants)
            for (uint64_t seed : manifest.seeds)
                for (double cont : manifest.contamination)
                    cells.push_back({variant, seed, cont});

        std::vector<CellResult> results(cells.size());
        std::atomic<size_t> next{0};
        const size_t thread_count =
            std::max<size_t>(1, std::min<size_t>(static_cast<size_t>(std::max(workers, 1)),
                                                 cells.size()));
        std::vector<std::thread> pool;
        for (size_t w = 0; w < thread_count; ++w)
            pool.emplace_back([&] {
                for (;;) {
                    const size_t i = next.fetch_add(1);
                    if (i >= cells.size()) break;
                    results[i] = run_cell(manifest, cells[i], out_dir);
                }
            });
        for (auto& th : pool) th.join();

        std::ostringstream rows;
        rows << "variant,seed,contamination,status,f1,precision,recall\n";
        for (size_t i = 0; i < cells.size(); ++i) {
            rows << cells[i].variant << ',' << cells[i].seed << ','
                 << format_double(cells[i].contamination) << ','
                 << (results[i].ok ? "ok" : "failed") << ',';
            if (results[i].ok)
                rows << format_double(results[i].f1) << ','
                     << format_double(results[i].precision) << ','
                     << format_double(results[i].recall);
            else
                rows << ",,";
            rows << "\n";
        }
        write_text_file(out_dir + "/results.csv", rows.str());

        // per (variant, contamination) aggregate across seeds, the plot data
        std::ostringstream summary;
        summary << "variant,contamination,runs,f1_mean,f1_std,precision_mean,precision_std\n";
        for (const auto& variant : manifest.variants)
            for (double cont : manifest.contamination) {
                std::vector<double> f1s, ps;
                for (size_t i = 0; i < cells.size(); ++i)
                    if (results[i].ok && cells[i].variant == variant &&
                        cells[i].contamination == cont) {
                        f1s.push_back(results[i].f1);
                        ps.push_back(results[i].precision);
                    }
                double f1_mean, f1_std, p_mean, p_std;
                mean_std(f1s, f1_mean, f1_std);
                mean_std(ps, p_mean, p_std);
                summary << variant << ',' << format_double(cont) << ',' << f1s.size() << ','
                        << format_double(f1_mean) << ',' << format_double(f1_std) << ','
                        << format_double(p_mean) << ',' << format_double(p_std) << "\n";
            }
        write_text_file(out_dir + "/summary.csv", summary.str());

        for (size_t i = 0; i < cells.size(); ++i)
            if (!results[i].ok) {
                log_warn("experiment cell " + cell_dir_name(cells[i]) +
                         " failed: " + results[i].message);
                exit_code = kExitPartialFailure;
            }
    });
    return guard_code != kExitOk ? guard_code : exit_code;
}

}  // namespace capmix

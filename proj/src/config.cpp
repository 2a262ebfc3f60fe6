#include "capmix/config.hpp"

#include <fstream>
#include <stdexcept>

namespace capmix {

using nlohmann::json;

namespace {

void require_keys(const json& j, std::initializer_list<const char*> allowed,
                  const std::string& ctx) {
    if (!j.is_object()) throw std::invalid_argument("config: " + ctx + " must be an object");
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : allowed)
            if (item.key() == k) ok = true;
        if (!ok)
            throw std::invalid_argument("config: unknown key '" + item.key() + "' in " + ctx);
    }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    return j.at(key).get<T>();
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config: parse error in " + path + ": " + e.what());
    }
    return j;
}

BenchmarkSpec benchmark_from_json(const json& j) {
    require_keys(j, {"length", "dims", "noise_std", "contamination"}, "data.subsets[].synthetic");
    BenchmarkSpec spec;
    spec.length = get_or<size_t>(j, "length", spec.length);
    spec.dims = get_or<size_t>(j, "dims", spec.dims);
    spec.noise_std = get_or<double>(j, "noise_std", spec.noise_std);
    spec.contamination = get_or<double>(j, "contamination", spec.contamination);
    if (spec.length < 100) throw std::invalid_argument("config: synthetic length must be >= 100");
    if (spec.dims < 1) throw std::invalid_argument("config: synthetic dims must be >= 1");
    if (spec.noise_std < 0.0) throw std::invalid_argument("config: noise_std must be >= 0");
    if (spec.contamination < 0.0)
        throw std::invalid_argument("config: contamination must be >= 0");
    return spec;
}

DataSubsetConfig subset_from_json(const json& j, size_t index) {
    require_keys(j, {"name", "synthetic", "train_csv", "val_csv", "test_csv"}, "data.subsets[]");
    DataSubsetConfig subset;
    subset.name = get_or<std::string>(j, "name", "subset" + std::to_string(index));
    if (j.contains("synthetic")) {
        subset.synthetic = benchmark_from_json(j.at("synthetic"));
        if (j.contains("train_csv") || j.contains("val_csv") || j.contains("test_csv"))
            throw std::invalid_argument("config: subset '" + subset.name +
                                        "' mixes synthetic and csv sources");
    } else {
        subset.train_csv = get_or<std::string>(j, "train_csv", "");
        subset.val_csv = get_or<std::string>(j, "val_csv", "");
        subset.test_csv = get_or<std::string>(j, "test_csv", "");
        if (subset.train_csv.empty() || subset.val_csv.empty() || subset.test_csv.empty())
            throw std::invalid_argument("config: subset '" + subset.name +
                                        "' needs train_csv, val_csv and test_csv");
    }
    return subset;
}

}  // namespace

RunConfig run_config_from_json(const json& j) {
    require_keys(j,
                 {"schema_version", "seed", "out_dir", "variant", "data", "window", "augment",
                  "revision", "mixup", "encoder", "projector", "optimizer", "train", "threshold"},
                 "config");
    RunConfig cfg;
    cfg.schema_version = get_or<int>(j, "schema_version", 1);
    if (cfg.schema_version != 1)
        throw std::invalid_argument("config: unsupported schema_version");
    cfg.seed = get_or<uint64_t>(j, "seed", cfg.seed);
    cfg.out_dir = get_or<std::string>(j, "out_dir", "");
    cfg.variant = get_or<std::string>(j, "variant", cfg.variant);

    if (!j.contains("data")) throw std::invalid_argument("config: missing data section");
    require_keys(j.at("data"), {"subsets"}, "data");
    const auto& subsets = j.at("data").at("subsets");
    if (!subsets.is_array() || subsets.empty())
        throw std::invalid_argument("config: data.subsets must be a non-empty array");
    for (size_t i = 0; i < subsets.size(); ++i)
        cfg.subsets.push_back(subset_from_json(subsets[i], i));

    if (j.contains("window")) {
        const auto& w = j.at("window");
        require_keys(w, {"length", "stride"}, "window");
        cfg.window.length = get_or<size_t>(w, "length", cfg.window.length);
        cfg.window.stride = get_or<size_t>(w, "stride", cfg.window.stride);
    }
    if (j.contains("augment")) {
        const auto& a = j.at("augment");
        require_keys(a, {"min_patch", "trend_bound", "trend_dims", "anomaly_ratio"}, "augment");
        cfg.augment.min_patch = get_or<size_t>(a, "min_patch", 0);
        cfg.augment.trend_bound = get_or<double>(a, "trend_bound", cfg.augment.trend_bound);
        cfg.augment.trend_dims = get_or<size_t>(a, "trend_dims", 0);
        cfg.augment.anomaly_ratio = get_or<double>(a, "anomaly_ratio", cfg.augment.anomaly_ratio);
    } else {
        cfg.augment.min_patch = 0;
        cfg.augment.trend_dims = 0;
    }
    if (j.contains("revision")) {
        const auto& r = j.at("revision");
        require_keys(r, {"gamma"}, "revision");
        cfg.revision.gamma = get_or<double>(r, "gamma", cfg.revision.gamma);
        if (cfg.revision.gamma < 1.0)
            throw std::invalid_argument("config: revision.gamma must be >= 1");
    }
    if (j.contains("mixup")) {
        const auto& m = j.at("mixup");
        require_keys(m, {"alpha", "enabled_layers"}, "mixup");
        cfg.mixup.alpha = get_or<double>(m, "alpha", cfg.mixup.alpha);
        if (m.contains("enabled_layers"))
            cfg.mixup.enabled_layers = m.at("enabled_layers").get<std::vector<int>>();
        cfg.mixup.validate();
    }
    if (j.contains("encoder")) {
        const auto& e = j.at("encoder");
        require_keys(e, {"channels", "kernel", "padding", "pool", "pool_stride", "dropout"},
                     "encoder");
        if (e.contains("channels")) {
            const auto ch = e.at("channels").get<std::vector<int64_t>>();
            if (ch.size() != 3)
                throw std::invalid_argument("config: encoder.channels needs exactly 3 entries");
            std::copy(ch.begin(), ch.end(), cfg.encoder.channels.begin());
        }
        cfg.encoder.kernel = get_or<int64_t>(e, "kernel", cfg.encoder.kernel);
        cfg.encoder.padding = get_or<int64_t>(e, "padding", cfg.encoder.padding);
        cfg.encoder.pool = get_or<int64_t>(e, "pool", cfg.encoder.pool);
        cfg.encoder.pool_stride = get_or<int64_t>(e, "pool_stride", cfg.encoder.pool_stride);
        cfg.encoder.dropout = get_or<double>(e, "dropout", cfg.encoder.dropout);
        cfg.encoder.validate();
    }
    if (j.contains("projector")) {
        const auto& p = j.at("projector");
        require_keys(p, {"hidden"}, "projector");
        cfg.projector.hidden = get_or<int64_t>(p, "hidden", cfg.projector.hidden);
        if (cfg.projector.hidden < 0)
            throw std::invalid_argument("config: projector.hidden must be >= 0");
    }
    if (j.contains("optimizer")) {
        const auto& o = j.at("optimizer");
        require_keys(o, {"lr", "beta1", "beta2", "weight_decay"}, "optimizer");
        cfg.train.lr = get_or<double>(o, "lr", cfg.train.lr);
        cfg.train.beta1 = get_or<double>(o, "beta1", cfg.train.beta1);
        cfg.train.beta2 = get_or<double>(o, "beta2", cfg.train.beta2);
        cfg.train.weight_decay = get_or<double>(o, "weight_decay", cfg.train.weight_decay);
        if (cfg.train.lr <= 0.0) throw std::invalid_argument("config: optimizer.lr must be > 0");
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        require_keys(t, {"epochs", "batch_size", "patience"}, "train");
        cfg.train.epochs = get_or<int>(t, "epochs", cfg.train.epochs);
        cfg.train.batch_size = get_or<size_t>(t, "batch_size", cfg.train.batch_size);
        cfg.train.patience = get_or<int>(t, "patience", cfg.train.patience);
        if (cfg.train.epochs < 0) throw std::invalid_argument("config: train.epochs must be >= 0");
        if (cfg.train.batch_size < 2)
            throw std::invalid_argument("config: train.batch_size must be >= 2");
    }
    if (j.contains("threshold")) {
        const auto& t = j.at("threshold");
        require_keys(t, {"tau_min", "tau_max", "step"}, "threshold");
        cfg.threshold.tau_min = get_or<double>(t, "tau_min", cfg.threshold.tau_min);
        cfg.threshold.tau_max = get_or<double>(t, "tau_max", cfg.threshold.tau_max);
        cfg.threshold.step = get_or<double>(t, "step", cfg.threshold.step);
        cfg.threshold.validate();
    }
    apply_variant(cfg, cfg.variant);
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    return run_config_from_json(load_json_file(path));
}

json run_config_to_json(const RunConfig& cfg) {
    json subsets = json::array();
    for (const auto& s : cfg.subsets) {
        json e;
        e["name"] = s.name;
        if (s.synthetic) {
            e["synthetic"] = {{"length", s.synthetic->length},
                              {"dims", s.synthetic->dims},
                              {"noise_std", s.synthetic->noise_std},
                              {"contamination", s.synthetic->contamination}};
        } else {
            e["train_csv"] = s.train_csv;
            e["val_csv"] = s.val_csv;
            e["test_csv"] = s.test_csv;
        }
        subsets.push_back(std::move(e));
    }
    return {{"schema_version", cfg.schema_version},
            {"seed", cfg.seed},
            {"out_dir", cfg.out_dir},
            {"variant", cfg.variant},
            {"data", {{"subsets", std::move(subsets)}}},
            {"window", {{"length", cfg.window.length}, {"stride", cfg.window.stride}}},
            {"augment",
             {{"min_patch", cfg.augment.min_patch},
              {"trend_bound", cfg.augment.trend_bound},
              {"trend_dims", cfg.augment.trend_dims},
              {"anomaly_ratio", cfg.augment.anomaly_ratio}}},
            {"revision", {{"gamma", cfg.revision.gamma}}},
            {"mixup", {{"alpha", cfg.mixup.alpha}, {"enabled_layers", cfg.mixup.enabled_layers}}},
            {"encoder",
             {{"channels", cfg.encoder.channels},
              {"kernel", cfg.encoder.kernel},
              {"padding", cfg.encoder.padding},
              {"pool", cfg.encoder.pool},
              {"pool_stride", cfg.encoder.pool_stride},
              {"dropout", cfg.encoder.dropout}}},
            {"projector", {{"hidden", cfg.projector.hidden}}},
            {"optimizer",
             {{"lr", cfg.train.lr},
              {"beta1", cfg.train.beta1},
              {"beta2", cfg.train.beta2},
              {"weight_decay", cfg.train.weight_decay}}},
            {"train",
             {{"epochs", cfg.train.epochs},
              {"batch_size", cfg.train.batch_size},
              {"patience", cfg.train.patience}}},
            {"threshold",
             {{"tau_min", cfg.threshold.tau_min},
              {"tau_max", cfg.threshold.tau_max},
              {"step", cfg.threshold.step}}}};
}

void apply_variant(RunConfig& cfg, const std::string& variant) {
    if (variant == "cap") {
        cfg.revision.gamma = 1.0;
        cfg.mixup.enabled_layers.clear();
    } else if (variant == "cap-gamma") {
        cfg.mixup.enabled_layers.clear();
    } else if (variant == "cap-mix") {
        cfg.revision.gamma = 1.0;
    } else if (variant != "capmix") {
        throw std::invalid_argument("config: unknown variant '" + variant + "'");
    }
    cfg.variant = variant;
}

AugmentConfig resolve_augment(const AugmentConfig& cfg, size_t window_len, size_t dims) {
    AugmentConfig out = cfg;
    if (out.min_patch == 0) out.min_patch = (window_len + 3) / 4;
    if (out.min_patch >= window_len) out.min_patch = window_len - 1;
    if (out.trend_dims == 0) out.trend_dims = (dims + 1) / 2;
    if (out.trend_dims > dims) out.trend_dims = dims;
    out.validate(window_len, dims);
    return out;
}

ExperimentManifest experiment_manifest_from_json(const json& j) {
    require_keys(j, {"variants", "seeds", "contamination", "config"}, "manifest");
    ExperimentManifest m;
    if (!j.contains("variants") || !j.contains("seeds") || !j.contains("config"))
        throw std::invalid_argument("manifest: variants, seeds and config are required");
    m.variants = j.at("variants").get<std::vector<std::string>>();
    m.seeds = j.at("seeds").get<std::vector<uint64_t>>();
    if (j.contains("contamination"))
        m.contamination = j.at("contamination").get<std::vector<double>>();
    if (m.variants.empty() || m.seeds.empty() || m.contamination.empty())
        throw std::invalid_argument("manifest: variants, seeds and contamination must be non-empty");
    m.base = run_config_from_json(j.at("config"));
    for (double c : m.contamination) {
        if (c < 0.0) throw std::invalid_argument("manifest: contamination must be >= 0");
        if (c > 0.0)
            for (const auto& s : m.base.subsets)
                if (!s.synthetic)
                    throw std::invalid_argument(
                        "manifest: contamination requires synthetic subsets");
    }
    for (const auto& v : m.variants) {
        RunConfig probe = m.base;
        apply_variant(probe, v);  // validates the name
    }
    return m;
}

ExperimentManifest load_experiment_manifest(const std::string& path) {
    return experiment_manifest_from_json(load_json_file(path));
}

SynthConfig synth_config_from_json(const json& j) {
    require_keys(j, {"length", "dims", "noise_std", "seed", "shapelet", "season", "trend",
                     "anomalies"},
                 "synth config");
    SynthConfig cfg;
    const size_t length = get_or<size_t>(j, "length", 1000);
    const size_t dims = get_or<size_t>(j, "dims", 1);
    cfg.generator = default_generator_config(length, dims);
    cfg.generator.noise_std = get_or<double>(j, "noise_std", 0.0);
    cfg.generator.seed = get_or<uint64_t>(j, "seed", 0);

    if (j.contains("shapelet")) {
        const auto& s = j.at("shapelet");
        require_keys(s, {"family", "amplitude", "phase", "mixing", "offset"}, "shapelet");
        if (s.contains("family"))
            cfg.generator.shapelet.family = wave_family_from_name(s.at("family").get<std::string>());
        if (s.contains("amplitude"))
            cfg.generator.shapelet.amplitude = s.at("amplitude").get<std::vector<double>>();
        if (s.contains("phase"))
            cfg.generator.shapelet.phase = s.at("phase").get<std::vector<double>>();
        if (s.contains("offset"))
            cfg.generator.shapelet.offset = s.at("offset").get<std::vector<double>>();
        if (s.contains("mixing")) {
            const auto rows = s.at("mixing").get<std::vector<std::vector<double>>>();
            Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
            for (size_t r = 0; r < rows.size(); ++r) {
                if (rows[r].size() != m.cols)
                    throw std::invalid_argument("synth config: ragged mixing matrix");
                for (size_t c = 0; c < m.cols; ++c) m.at(r, c) = rows[r][c];
            }
            cfg.generator.shapelet.mixing = std::move(m);
        }
    }
    if (j.contains("season")) {
        const auto& s = j.at("season");
        require_keys(s, {"omega", "period"}, "season");
        cfg.generator.season.omega = get_or<double>(s, "omega", 1.0);
        cfg.generator.season.period = get_or<size_t>(s, "period", 0);
    }
    if (j.contains("trend")) {
        const auto& t = j.at("trend");
        require_keys(t, {"segments"}, "trend");
        for (const auto& seg : t.at("segments")) {
            require_keys(seg, {"start", "slope"}, "trend.segments[]");
            TrendSegment ts;
            ts.start = seg.at("start").get<size_t>();
            ts.slope = seg.at("slope").get<std::vector<double>>();
            cfg.generator.trend.segments.push_back(std::move(ts));
        }
    }
    if (j.contains("anomalies")) {
        for (const auto& a : j.at("anomalies")) {
            require_keys(a, {"kind", "start", "length", "magnitude"}, "anomalies[]");
            GtAnomalySpec spec;
            spec.kind = anomaly_kind_from_name(a.at("kind").get<std::string>());
            spec.start = a.at("start").get<size_t>();
            spec.length = get_or<size_t>(a, "length", 1);
            spec.magnitude = get_or<double>(a, "magnitude", 4.0);
            cfg.anomalies.push_back(spec);
        }
    }
    cfg.generator.validate();
    return cfg;
}

SynthConfig load_synth_config(const std::string& path) {
    return synth_config_from_json(load_json_file(path));
}

json synth_config_to_json(const SynthConfig& cfg) {
    const auto& g = cfg.generator;
    std::vector<std::vector<double>> mixing(g.dims, std::vector<double>(g.dims));
    for (size_t r = 0; r < g.dims; ++r)
        for (size_t c = 0; c < g.dims; ++c) mixing[r][c] = g.shapelet.mixing.at(r, c);
    json segments = json::array();
    for (const auto& seg : g.trend.segments)
        segments.push_back({{"start", seg.start}, {"slope", seg.slope}});
    json anomalies = json::array();
    for (const auto& a : cfg.anomalies)
        anomalies.push_back({{"kind", anomaly_kind_name(a.kind)},
                             {"start", a.start},
                             {"length", a.length},
                             {"magnitude", a.magnitude}});
    return {{"length", g.length},
            {"dims", g.dims},
            {"noise_std", g.noise_std},
            {"seed", g.seed},
            {"shapelet",
             {{"family", wave_family_name(g.shapelet.family)},
              {"amplitude", g.shapelet.amplitude},
              {"phase", g.shapelet.phase},
              {"mixing", mixing},
              {"offset", g.shapelet.offset}}},
            {"season", {{"omega", g.season.omega}, {"period", g.season.period}}},
            {"trend", {{"segments", std::move(segments)}}},
            {"anomalies", std::move(anomalies)}};
}

}  // namespace capmix

#include "capmix/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace capmix {

using nlohmann::json;

void EncoderConfig::validate() const {
    for (int64_t c : channels)
        if (c < 1) throw std::invalid_argument("EncoderConfig: channel widths must be >= 1");
    if (kernel < 1 || padding < 0 || pool < 1 || pool_stride < 1)
        throw std::invalid_argument("EncoderConfig: invalid conv/pool geometry");
    if (dropout < 0.0 || dropout >= 1.0)
        throw std::invalid_argument("EncoderConfig: dropout must be in [0, 1)");
}

void MixupConfig::validate() const {
    if (alpha <= 0.0) throw std::invalid_argument("MixupConfig: alpha must be > 0");
    std::vector<int> seen;
    for (int l : enabled_layers) {
        if (l < 0 || l > 3)
            throw std::invalid_argument("MixupConfig: layers must be in {0, 1, 2, 3}");
        if (std::find(seen.begin(), seen.end(), l) != seen.end())
            throw std::invalid_argument("MixupConfig: duplicate layer");
        seen.push_back(l);
    }
}

namespace {

Tensor apply_mix(const Tensor& h, double lambda, const std::vector<int64_t>& perm) {
    const int64_t B = h.dim(0);
    if (static_cast<int64_t>(perm.size()) != B)
        throw std::invalid_argument("mixup: permutation size mismatch");
    for (int64_t p : perm)
        if (p < 0 || p >= B) throw std::invalid_argument("mixup: permutation index out of range");
    const int64_t row = h.size() / B;
    Tensor out = h;
    for (int64_t i = 0; i < B; ++i) {
        const double* self = h.values.data() + i * row;
        const double* other = h.values.data() + perm[i] * row;
        double* dst = out.values.data() + i * row;
        for (int64_t j = 0; j < row; ++j) dst[j] = lambda * self[j] + (1.0 - lambda) * other[j];
    }
    return out;
}

Tensor mix_backward(const Tensor& grad, double lambda, const std::vector<int64_t>& perm) {
    const int64_t B = grad.dim(0);
    const int64_t row = grad.size() / B;
    Tensor out(grad.shape);
    for (int64_t i = 0; i < B; ++i) {
        const double* g = grad.values.data() + i * row;
        double* self = out.values.data() + i * row;
        double* other = out.values.data() + perm[i] * row;
        for (int64_t j = 0; j < row; ++j) {
            self[j] += lambda * g[j];
            other[j] += (1.0 - lambda) * g[j];
        }
    }
    return out;
}

int64_t compute_feature_width(const EncoderConfig& cfg, size_t window_len) {
    cfg.validate();
    const MaxPool1d pool(cfg.pool, cfg.pool_stride, /*ceil_mode=*/true);
    int64_t L = static_cast<int64_t>(window_len);
    for (int k = 0; k < 3; ++k) {
        const int64_t padded = L + 2 * cfg.padding;
        if (cfg.kernel > padded)
            throw std::invalid_argument("CapmixModel: window length too small for three blocks");
        L = (padded - cfg.kernel) + 1;  // conv stride is 1
        L = pool.out_length(L);
        if (L < 1)
            throw std::invalid_argument("CapmixModel: window length too small for three blocks");
    }
    return cfg.channels[2] * L;
}

}  // namespace

std::pair<Tensor, std::vector<double>> mixup_pair(const Tensor& x, const std::vector<double>& y,
                                                  double lambda,
                                                  const std::vector<int64_t>& perm) {
    if (lambda < 0.0 || lambda > 1.0) throw std::invalid_argument("mixup_pair: lambda not in [0, 1]");
    if (y.size() != static_cast<size_t>(x.dim(0)))
        throw std::invalid_argument("mixup_pair: label count mismatch");
    Tensor mixed = apply_mix(x, lambda, perm);
    std::vector<double> labels(y.size());
    for (size_t i = 0; i < y.size(); ++i)
        labels[i] = lambda * y[i] + (1.0 - lambda) * y[static_cast<size_t>(perm[i])];
    return {std::move(mixed), std::move(labels)};
}

Tensor batch_tensor(const std::vector<Window>& windows) {
    if (windows.empty()) throw std::invalid_argument("batch_tensor: empty batch");
    const size_t t = windows[0].data.rows, d = windows[0].data.cols;
    Tensor x({static_cast<int64_t>(windows.size()), static_cast<int64_t>(d),
              static_cast<int64_t>(t)});
    for (size_t b = 0; b < windows.size(); ++b) {
        const auto& w = windows[b];
        if (w.data.rows != t || w.data.cols != d)
            throw std::invalid_argument("batch_tensor: ragged batch");
        for (size_t c = 0; c < d; ++c)
            for (size_t i = 0; i < t; ++i)
                x.values[(b * d + c) * t + i] = w.data.at(i, c);
    }
    return x;
}

CapmixModel::CapmixModel(size_t dims, size_t window_len, const EncoderConfig& enc_cfg,
                         const ProjectorConfig& proj_cfg, uint64_t init_seed)
    : dims_(dims),
      window_len_(window_len),
      enc_cfg_(enc_cfg),
      feature_width_(compute_feature_width(enc_cfg, window_len)),
      hidden_(proj_cfg.hidden > 0 ? proj_cfg.hidden : feature_width_),
      init_rng_(init_seed),
      dropout_(enc_cfg.dropout),
      proj1_(feature_width_, hidden_, "projector.fc1", init_rng_),
      proj_bn_(hidden_, "projector.bn"),
      proj2_(hidden_, 2, "projector.fc2", init_rng_) {
    if (dims < 1) throw std::invalid_argument("CapmixModel: dims must be >= 1");
    int64_t in_ch = static_cast<int64_t>(dims);
    for (int k = 0; k < 3; ++k) {
        const std::string base = "encoder.block" + std::to_string(k);
        blocks_.push_back(Block{
            Conv1d(in_ch, enc_cfg.channels[k], enc_cfg.kernel, 1, enc_cfg.padding, base + ".conv",
                   init_rng_),
            BatchNorm1d(enc_cfg.channels[k], base + ".bn"), Relu{},
            MaxPool1d(enc_cfg.pool, enc_cfg.pool_stride, /*ceil_mode=*/true)});
        in_ch = enc_cfg.channels[k];
    }
}

Tensor CapmixModel::encode_with_mix(const Tensor& x, Mode mode, Rng& rng, int layer,
                                    double lambda, const std::vector<int64_t>& perm) {
    if (x.shape.size() != 3 || x.dim(1) != static_cast<int64_t>(dims_) ||
        x.dim(2) != static_cast<int64_t>(window_len_))
        throw std::invalid_argument("CapmixModel: input must be B x dims x window_len");
    Tensor h = x;
    if (layer == 0) h = apply_mix(h, lambda, perm);
    for (int k = 0; k < 3; ++k) {
        h = blocks_[k].conv.forward(h);
        h = blocks_[k].bn.forward(h, mode);
        h = blocks_[k].relu.forward(h);
        h = blocks_[k].pool.forward(h);
        if (k == 0) h = dropout_.forward(h, mode, rng);
        if (layer == k + 1) h = apply_mix(h, lambda, perm);
    }
    return flatten_.forward(h);
}

Tensor CapmixModel::encode(const Tensor& x, Mode mode, Rng& rng) {
    trace_valid_ = false;
    return encode_with_mix(x, mode, rng, -1, 1.0, {});
}

Tensor CapmixModel::project(const Tensor& z, Mode mode) {
    const int64_t B = z.dim(0);
    Tensor a = proj1_.forward(z);
    a.shape = {B, hidden_, 1};
    Tensor n = proj_bn_.forward(a, mode);
    n.shape = {B, hidden_};
    Tensor r = proj_relu_.forward(n);
    return proj2_.forward(r);
}

Tensor CapmixModel::project_backward(const Tensor& grad_logits) {
    Tensor gr = proj2_.backward(grad_logits);
    Tensor gn = proj_relu_.backward(gr);
    gn.shape = {gn.dim(0), hidden_, 1};
    Tensor ga = proj_bn_.backward(gn);
    ga.shape = {ga.dim(0), hidden_};
    return proj1_.backward(ga);
}

std::vector<double> CapmixModel::forward_probs(const Tensor& x, Mode mode, Rng& rng) {
    const auto fw = forward_train_at(x, std::vector<double>(x.dim(0), 0.0), -1, 1.0, {}, mode, rng);
    return fw.probs;
}

CapmixModel::TrainForward CapmixModel::forward_train(const Tensor& x,
                                                     const std::vector<double>& labels,
                                                     const MixupConfig& mix, Rng& rng) {
    mix.validate();
    if (!mix.enabled()) return forward_train_at(x, labels, -1, 1.0, {}, Mode::Train, rng);
    const double lambda = rng.beta(mix.alpha, mix.alpha);
    const int layer = mix.enabled_layers[rng.below(mix.enabled_layers.size())];
    const auto perm = rng.permutation(static_cast<size_t>(x.dim(0)));
    return forward_train_at(x, labels, layer, lambda, perm, Mode::Train, rng);
}

CapmixModel::TrainForward CapmixModel::forward_train_at(const Tensor& x,
                                                        const std::vector<double>& labels,
                                                        int layer, double lambda,
                                                        const std::vector<int64_t>& perm,
                                                        Mode mode, Rng& rng) {
    if (labels.size() != static_cast<size_t>(x.dim(0)))
        throw std::invalid_argument("forward_train: label count mismatch");
    if (layer >= 0 && (lambda < 0.0 || lambda > 1.0))
        throw std::invalid_argument("forward_train: lambda not in [0, 1]");

    trace_mix_ = {layer, lambda, perm};
    trace_mode_ = mode;
    const Tensor z = encode_with_mix(x, mode, rng, layer, lambda, perm);
    const Tensor q = project(z, mode);
    trace_probs2_ = softmax2(q);
    trace_valid_ = true;

    TrainForward out;
    out.mix_layer = layer;
    out.lambda = lambda;
    const int64_t B = x.dim(0);
    out.probs.resize(static_cast<size_t>(B));
    for (int64_t b = 0; b < B; ++b)
        out.probs[static_cast<size_t>(b)] = trace_probs2_.values[static_cast<size_t>(b) * 2 + 1];
    if (layer >= 0) {
        out.labels.resize(labels.size());
        for (size_t i = 0; i < labels.size(); ++i)
            out.labels[i] =
                lambda * labels[i] + (1.0 - lambda) * labels[static_cast<size_t>(perm[i])];
    } else {
        out.labels = labels;
    }
    return out;
}

Tensor CapmixModel::backward_bce(const std::vector<double>& targets) {
    if (!trace_valid_) throw std::runtime_error("backward_bce: no cached forward");
    const int64_t B = trace_probs2_.dim(0);
    std::vector<double> p(static_cast<size_t>(B));
    for (int64_t b = 0; b < B; ++b)
        p[static_cast<size_t>(b)] = trace_probs2_.values[static_cast<size_t>(b) * 2 + 1];
    const auto gp = bce_loss_backward(p, targets);

    Tensor grad_probs({B, 2});
    for (int64_t b = 0; b < B; ++b)
        grad_probs.values[static_cast<size_t>(b) * 2 + 1] = gp[static_cast<size_t>(b)];
    Tensor gq = softmax2_backward(trace_probs2_, grad_probs);
    Tensor gh = project_backward(gq);
    gh = flatten_.backward(gh);
    for (int k = 2; k >= 0; --k) {
        if (trace_mix_.layer == k + 1) gh = mix_backward(gh, trace_mix_.lambda, trace_mix_.perm);
        if (k == 0) gh = dropout_.backward(gh);
        gh = blocks_[k].pool.backward(gh);
        gh = blocks_[k].relu.backward(gh);
        gh = blocks_[k].bn.backward(gh);
        gh = blocks_[k].conv.backward(gh);
    }
    if (trace_mix_.layer == 0) gh = mix_backward(gh, trace_mix_.lambda, trace_mix_.perm);
    trace_valid_ = false;
    return gh;
}

std::vector<Parameter*> CapmixModel::parameters() {
    std::vector<Parameter*> out;
    for (auto& b : blocks_) {
        out.push_back(&b.conv.weight);
        out.push_back(&b.conv.bias);
        out.push_back(&b.bn.gamma);
        out.push_back(&b.bn.beta);
    }
    out.push_back(&proj1_.weight);
    out.push_back(&proj1_.bias);
    out.push_back(&proj_bn_.gamma);
    out.push_back(&proj_bn_.beta);
    out.push_back(&proj2_.weight);
    out.push_back(&proj2_.bias);
    return out;
}

std::vector<BatchNorm1d*> CapmixModel::batchnorms() {
    std::vector<BatchNorm1d*> out;
    for (auto& b : blocks_) out.push_back(&b.bn);
    out.push_back(&proj_bn_);
    return out;
}

void CapmixModel::zero_grad() {
    for (Parameter* p : parameters()) p->tensor.zero_grad();
}

std::vector<double> CapmixModel::snapshot() const {
    std::vector<double> out;
    auto& self = const_cast<CapmixModel&>(*this);
    for (Parameter* p : self.parameters())
        out.insert(out.end(), p->tensor.values.begin(), p->tensor.values.end());
    for (BatchNorm1d* bn : self.batchnorms()) {
        out.insert(out.end(), bn->running_mean.begin(), bn->running_mean.end());
        out.insert(out.end(), bn->running_var.begin(), bn->running_var.end());
    }
    return out;
}

void CapmixModel::restore(const std::vector<double>& snapshot) {
    size_t pos = 0;
    for (Parameter* p : parameters()) {
        if (pos + p->tensor.values.size() > snapshot.size())
            throw std::invalid_argument("restore: snapshot too short");
        std::copy_n(snapshot.begin() + static_cast<ptrdiff_t>(pos), p->tensor.values.size(),
                    p->tensor.values.begin());
        pos += p->tensor.values.size();
    }
    for (BatchNorm1d* bn : batchnorms()) {
        std::copy_n(snapshot.begin() + static_cast<ptrdiff_t>(pos), bn->running_mean.size(),
                    bn->running_mean.begin());
        pos += bn->running_mean.size();
        std::copy_n(snapshot.begin() + static_cast<ptrdiff_t>(pos), bn->running_var.size(),
                    bn->running_var.begin());
        pos += bn->running_var.size();
    }
    if (pos != snapshot.size()) throw std::invalid_argument("restore: snapshot size mismatch");
    trace_valid_ = false;
}

json CapmixModel::state_to_json() const {
    auto& self = const_cast<CapmixModel&>(*this);
    json j;
    j["format"] = "capmix-model-v1";
    j["dims"] = dims_;
    j["window_len"] = window_len_;
    j["encoder"] = {{"channels", enc_cfg_.channels}, {"kernel", enc_cfg_.kernel},
                    {"padding", enc_cfg_.padding},   {"pool", enc_cfg_.pool},
                    {"pool_stride", enc_cfg_.pool_stride}, {"dropout", enc_cfg_.dropout}};
    j["projector_hidden"] = hidden_;
    json params = json::array();
    for (Parameter* p : self.parameters())
        params.push_back({{"name", p->name}, {"shape", p->tensor.shape},
                          {"values", p->tensor.values}});
    j["parameters"] = std::move(params);
    json running = json::array();
    for (BatchNorm1d* bn : self.batchnorms())
        running.push_back({{"name", bn->name()}, {"mean", bn->running_mean},
                           {"var", bn->running_var}});
    j["running_stats"] = std::move(running);
    return j;
}

void CapmixModel::state_from_json(const json& j) {
    if (j.at("format").get<std::string>() != "capmix-model-v1")
        throw std::invalid_argument("checkpoint: unknown model format");
    for (const auto& entry : j.at("parameters")) {
        const std::string name = entry.at("name").get<std::string>();
        Parameter* target = nullptr;
        for (Parameter* p : parameters())
            if (p->name == name) target = p;
        if (!target) throw std::invalid_argument("checkpoint: unknown parameter '" + name + "'");
        const auto shape = entry.at("shape").get<std::vector<int64_t>>();
        if (shape != target->tensor.shape)
            throw std::invalid_argument("checkpoint: shape mismatch for '" + name + "'");
        target->tensor.values = entry.at("values").get<std::vector<double>>();
        if (target->tensor.values.size() != static_cast<size_t>(target->tensor.size()))
            throw std::invalid_argument("checkpoint: value count mismatch for '" + name + "'");
    }
    for (const auto& entry : j.at("running_stats")) {
        const std::string name = entry.at("name").get<std::string>();
        BatchNorm1d* target = nullptr;
        for (BatchNorm1d* bn : batchnorms())
            if (bn->name() == name) target = bn;
        if (!target) throw std::invalid_argument("checkpoint: unknown batchnorm '" + name + "'");
        auto mean = entry.at("mean").get<std::vector<double>>();
        auto var = entry.at("var").get<std::vector<double>>();
        if (mean.size() != target->running_mean.size() || var.size() != target->running_var.size())
            throw std::invalid_argument("checkpoint: running stat size mismatch for '" + name + "'");
        target->running_mean = std::move(mean);
        target->running_var = std::move(var);
    }
    trace_valid_ = false;
}

CapmixModel model_from_state_json(const json& j) {
    EncoderConfig enc;
    const auto& e = j.at("encoder");
    const auto ch = e.at("channels").get<std::vector<int64_t>>();
    if (ch.size() != 3) throw std::invalid_argument("checkpoint: need exactly 3 channel widths");
    std::copy(ch.begin(), ch.end(), enc.channels.begin());
    enc.kernel = e.at("kernel").get<int64_t>();
    enc.padding = e.at("padding").get<int64_t>();
    enc.pool = e.at("pool").get<int64_t>();
    enc.pool_stride = e.at("pool_stride").get<int64_t>();
    enc.dropout = e.at("dropout").get<double>();
    ProjectorConfig proj;
    proj.hidden = j.at("projector_hidden").get<int64_t>();
    CapmixModel model(j.at("dims").get<size_t>(), j.at("window_len").get<size_t>(), enc, proj, 0);
    model.state_from_json(j);
    return model;
}

// ---------------------------------------------------------------------------
// Trainer
// ---------------------------------------------------------------------------

json TrainerState::to_json() const {
    json m;
    for (const auto& [name, mv] : adam.moments)
        m[name] = {{"m", mv.first}, {"v", mv.second}};
    return {{"adam",
             {{"step", adam.step},
              {"lr", adam.lr},
              {"beta1", adam.beta1},
              {"beta2", adam.beta2},
              {"weight_decay", adam.weight_decay},
              {"eps", adam.eps},
              {"moments", std::move(m)}}},
            {"rng_state", rng_state},
            {"epochs_done", epochs_done},
            {"best_val", best_val},
            {"has_best", has_best},
            {"best_epoch", best_epoch},
            {"wait", wait},
            {"stopped", stopped},
            {"best_snapshot", best_snapshot}};
}

TrainerState TrainerState::from_json(const json& j) {
    TrainerState st;
    const auto& a = j.at("adam");
    st.adam.step = a.at("step").get<int64_t>();
    st.adam.lr = a.at("lr").get<double>();
    st.adam.beta1 = a.at("beta1").get<double>();
    st.adam.beta2 = a.at("beta2").get<double>();
    st.adam.weight_decay = a.at("weight_decay").get<double>();
    st.adam.eps = a.at("eps").get<double>();
    for (const auto& [name, mv] : a.at("moments").items())
        st.adam.moments[name] = {mv.at("m").get<std::vector<double>>(),
                                 mv.at("v").get<std::vector<double>>()};
    st.rng_state = j.at("rng_state").get<std::string>();
    st.epochs_done = j.at("epochs_done").get<int>();
    st.best_val = j.at("best_val").get<double>();
    st.has_best = j.at("has_best").get<bool>();
    st.best_epoch = j.at("best_epoch").get<int>();
    st.wait = j.at("wait").get<int>();
    st.stopped = j.at("stopped").get<bool>();
    st.best_snapshot = j.at("best_snapshot").get<std::vector<double>>();
    return st;
}

TrainResult train_model(CapmixModel& model, const std::vector<Window>& train_windows,
                        const std::vector<Window>& val_windows, const AugmentConfig& aug_cfg,
                        const RevisionConfig& rev_cfg, const MixupConfig& mix_cfg,
                        const TrainConfig& train_cfg, TrainerState* state) {
    if (train_windows.size() < 2)
        throw std::invalid_argument("train: need at least 2 training windows");
    if (train_cfg.batch_size < 2) throw std::invalid_argument("train: batch size must be >= 2");
    mix_cfg.validate();
    aug_cfg.validate(model.window_len(), model.input_dims());

    TrainerState local;
    TrainerState& st = state ? *state : local;
    Rng rng(train_cfg.seed);
    if (st.epochs_done > 0) {
        rng.set_state_string(st.rng_state);
    } else {
        st.adam.lr = train_cfg.lr;
        st.adam.beta1 = train_cfg.beta1;
        st.adam.beta2 = train_cfg.beta2;
        st.adam.weight_decay = train_cfg.weight_decay;
    }

    const NormalityStats nstats = normality_stats(train_windows);
    const auto params = model.parameters();

    std::vector<double> val_labels(val_windows.size());
    for (size_t i = 0; i < val_windows.size(); ++i) val_labels[i] = val_windows[i].label;

    TrainResult result;
    result.first_epoch = st.epochs_done;
    if (st.stopped) {
        result.best_epoch = st.best_epoch;
        result.early_stopped = true;
        return result;
    }

    for (int epoch = st.epochs_done; epoch < train_cfg.epochs; ++epoch) {
        const auto order = rng.permutation(train_windows.size());
        double loss_sum = 0.0;
        size_t sample_count = 0;
        for (size_t pos = 0; pos < order.size(); pos += train_cfg.batch_size) {
            const size_t bsz = std::min(train_cfg.batch_size, order.size() - pos);
            if (bsz < 2) continue;  // BCE/BN and the cut source both need a pair
            std::vector<Window> batch;
            batch.reserve(bsz);
            for (size_t i = 0; i < bsz; ++i)
                batch.push_back(train_windows[static_cast<size_t>(order[pos + i])]);

            const auto injected = cutaddpaste_batch(batch, aug_cfg, rng);
            const auto revised = revise_labels(injected.windows, nstats, rev_cfg);

            std::vector<Window> combined = batch;
            combined.insert(combined.end(), revised.begin(), revised.end());
            std::vector<double> labels(combined.size());
            for (size_t i = 0; i < combined.size(); ++i) labels[i] = combined[i].label;

            const Tensor x = batch_tensor(combined);
            const auto fw = model.forward_train(x, labels, mix_cfg, rng);
            const double loss = bce_loss(fw.probs, fw.labels);
            if (!std::isfinite(loss))
                throw NumericalError("train: loss diverged at epoch " + std::to_string(epoch));
            model.zero_grad();
            model.backward_bce(fw.labels);
            adam_step(params, st.adam);
            loss_sum += loss * static_cast<double>(combined.size());
            sample_count += combined.size();
        }
        result.train_loss.push_back(sample_count ? loss_sum / static_cast<double>(sample_count)
                                                 : 0.0);

        st.epochs_done = epoch + 1;
        if (!val_windows.empty()) {
            const auto val_probs = score_windows(model, val_windows);
            const double val = bce_loss(val_probs, val_labels);
            result.val_loss.push_back(val);
            if (train_cfg.patience > 0) {
                if (!st.has_best || val < st.best_val - 1e-12) {
                    st.best_val = val;
                    st.has_best = true;
                    st.best_epoch = epoch;
                    st.best_snapshot = model.snapshot();
                    st.wait = 0;
                } else if (++st.wait >= train_cfg.patience) {
                    st.stopped = true;
                    model.restore(st.best_snapshot);
                    result.early_stopped = true;
                    break;
                }
            }
        }
    }

    st.rng_state = rng.state_string();
    result.best_epoch = st.best_epoch;
    return result;
}

std::vector<double> score_windows(CapmixModel& model, const std::vector<Window>& windows) {
    std::vector<double> scores;
    scores.reserve(windows.size());
    Rng unused(0);
    constexpr size_t kChunk = 256;
    for (size_t pos = 0; pos < windows.size(); pos += kChunk) {
        const size_t n = std::min(kChunk, windows.size() - pos);
        const std::vector<Window> part(windows.begin() + static_cast<ptrdiff_t>(pos),
                                       windows.begin() + static_cast<ptrdiff_t>(pos + n));
        const Tensor x = batch_tensor(part);
        const auto p = model.forward_probs(x, Mode::Eval, unused);
        scores.insert(scores.end(), p.begin(), p.end());
    }
    return scores;
}

}  // namespace capmix

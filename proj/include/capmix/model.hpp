#pragma once
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "capmix/augment.hpp"
#include "capmix/diffnet.hpp"
#include "capmix/ts_core.hpp"

namespace capmix {

struct EncoderConfig {
    std::array<int64_t, 3> channels{32, 64, 128};
    int64_t kernel = 4;
    int64_t padding = 1;
    int64_t pool = 2;
    int64_t pool_stride = 2;
    double dropout = 0.45;  // block 1 only

    void validate() const;
};

struct MixupConfig {
    double alpha = 0.5;                       // Beta(alpha, alpha) concentration
    std::vector<int> enabled_layers{0, 1, 2, 3};  // 0 = input space, 1-3 = after block

    void validate() const;
    bool enabled() const { return !enabled_layers.empty(); }
};

struct ProjectorConfig {
    int64_t hidden = 0;  // 0 means "encoder output width"; output width is fixed at 2
};

// Convex interpolation of a batch against a permutation of itself; labels are
// always mixed with the same lambda.
std::pair<Tensor, std::vector<double>> mixup_pair(const Tensor& x, const std::vector<double>& y,
                                                  double lambda,
                                                  const std::vector<int64_t>& perm);

// Stacks same-shaped windows into a B x d x t tensor (channels first).
Tensor batch_tensor(const std::vector<Window>& windows);

// Three conv/bn/relu/pool blocks (dropout after pooling in block 1), a
// flatten, and a linear/bn/relu/linear projector ending in two logits.
class CapmixModel {
public:
    CapmixModel(size_t dims, size_t window_len, const EncoderConfig& enc_cfg,
                const ProjectorConfig& proj_cfg, uint64_t init_seed);

    size_t input_dims() const { return dims_; }
    size_t window_len() const { return window_len_; }
    int64_t feature_width() const { return feature_width_; }
    int64_t projector_hidden() const { return hidden_; }
    const EncoderConfig& encoder_config() const { return enc_cfg_; }

    // Encoder representation z, shape B x F.
    Tensor encode(const Tensor& x, Mode mode, Rng& rng);

    // Full forward; returns p_i = P(anomalous) per sample.
    std::vector<double> forward_probs(const Tensor& x, Mode mode, Rng& rng);

    struct TrainForward {
        std::vector<double> probs;
        std::vector<double> labels;  // mixed when mixing was active
        int mix_layer = -1;          // -1 means no mixing
        double lambda = 1.0;
    };

    // Draws lambda ~ Beta(alpha, alpha), one active layer uniformly from
    // enabled_layers, and a pairing permutation; skips every draw when
    // enabled_layers is empty.
    TrainForward forward_train(const Tensor& x, const std::vector<double>& labels,
                               const MixupConfig& mix, Rng& rng);

    // Deterministic variant with the mixing decisions supplied. layer -1
    // disables mixing.
    TrainForward forward_train_at(const Tensor& x, const std::vector<double>& labels, int layer,
                                  double lambda, const std::vector<int64_t>& perm, Mode mode,
                                  Rng& rng);

    // Backpropagates mean BCE between the cached forward's probabilities and
    // the given targets; accumulates parameter gradients and returns the
    // gradient with respect to the (pre-mix) input batch.
    Tensor backward_bce(const std::vector<double>& targets);

    std::vector<Parameter*> parameters();
    std::vector<BatchNorm1d*> batchnorms();
    void zero_grad();

    // Full numeric state (parameters + BN running stats) as one flat vector.
    std::vector<double> snapshot() const;
    void restore(const std::vector<double>& snapshot);

    nlohmann::json state_to_json() const;
    void state_from_json(const nlohmann::json& j);

private:
    Tensor encode_with_mix(const Tensor& x, Mode mode, Rng& rng, int layer, double lambda,
                           const std::vector<int64_t>& perm);
    Tensor project(const Tensor& z, Mode mode);
    Tensor project_backward(const Tensor& grad_logits);

    size_t dims_, window_len_;
    EncoderConfig enc_cfg_;
    int64_t feature_width_ = 0;
    int64_t hidden_ = 0;
    Rng init_rng_;  // consumed during construction only

    struct Block {
        Conv1d conv;
        BatchNorm1d bn;
        Relu relu;
        MaxPool1d pool;
    };
    std::vector<Block> blocks_;
    Dropout dropout_;
    Flatten flatten_;
    Linear proj1_;
    BatchNorm1d proj_bn_;
    Relu proj_relu_;
    Linear proj2_;

    // trace of the latest forward, consumed by backward_bce
    struct MixTrace {
        int layer = -1;
        double lambda = 1.0;
        std::vector<int64_t> perm;
    };
    MixTrace trace_mix_;
    Mode trace_mode_ = Mode::Eval;
    Tensor trace_probs2_;  // B x 2 softmax output
    bool trace_valid_ = false;
};

// Builds the model from a checkpoint's architecture fields.
CapmixModel model_from_state_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct TrainConfig {
    int epochs = 30;
    size_t batch_size = 64;
    int patience = 10;  // early-stopping patience in epochs; <= 0 disables
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double weight_decay = 5e-4;
    uint64_t seed = 1;
};

// Mutable trainer state; persisting it alongside the model makes a resumed
// run bit-identical to an uninterrupted one.
struct TrainerState {
    AdamState adam;
    std::string rng_state;
    int epochs_done = 0;
    double best_val = 0.0;
    bool has_best = false;
    int best_epoch = -1;
    int wait = 0;
    bool stopped = false;
    std::vector<double> best_snapshot;

    nlohmann::json to_json() const;
    static TrainerState from_json(const nlohmann::json& j);
};

struct TrainResult {
    std::vector<double> train_loss;  // one entry per epoch run in this call
    std::vector<double> val_loss;
    int first_epoch = 0;
    int best_epoch = -1;
    bool early_stopped = false;
};

// Algorithm: per batch, CutAddPaste injection, label revision against the
// training normality stats, concatenation, mixup forward, BCE, Adam step.
// Validation loss uses eval-mode probabilities against the window labels.
// Early stopping restores the best-validation parameters when it fires.
// Throws std::runtime_error when the loss becomes non-finite.
TrainResult train_model(CapmixModel& model, const std::vector<Window>& train_windows,
                        const std::vector<Window>& val_windows, const AugmentConfig& aug_cfg,
                        const RevisionConfig& rev_cfg, const MixupConfig& mix_cfg,
                        const TrainConfig& train_cfg, TrainerState* state = nullptr);

// Eval-mode anomaly scores S_i = p_i, in window order.
std::vector<double> score_windows(CapmixModel& model, const std::vector<Window>& windows);

}  // namespace capmix

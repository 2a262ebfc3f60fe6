#pragma once
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "capmix/rng.hpp"

namespace capmix {

// Raised when a computation produces non-finite values (e.g. diverged loss).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Mode { Train, Eval };

// Dense tensor of doubles. grad is empty until requested; when present it has
// the same size as values.
struct Tensor {
    std::vector<int64_t> shape;
    std::vector<double> values;
    std::vector<double> grad;

    Tensor() = default;
    explicit Tensor(std::vector<int64_t> s, double fill = 0.0);

    int64_t size() const;
    int64_t dim(size_t i) const { return shape[i]; }

    void ensure_grad();
    void zero_grad();
};

struct Parameter {
    Tensor tensor;
    bool requires_grad = true;
    std::string name;
};

// ---------------------------------------------------------------------------
// Layers. Each caches what its backward pass needs from the most recent
// forward call; a layer instance is single-writer during training.
// ---------------------------------------------------------------------------

// 1-D cross-correlation, input B x C_in x L, output B x C_out x L' with
// L' = floor((L + 2*padding - kernel) / stride) + 1.
class Conv1d {
public:
    Conv1d(int64_t in_channels, int64_t out_channels, int64_t kernel, int64_t stride,
           int64_t padding, const std::string& name, Rng& init_rng);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& grad_out);

    Parameter weight;  // C_out x C_in x K
    Parameter bias;    // C_out

    int64_t out_length(int64_t in_length) const;

private:
    int64_t in_channels_, out_channels_, kernel_, stride_, padding_;
    Tensor cached_input_;
};

// Per-channel batch normalization over B x C x L. Train mode uses batch
// statistics (population variance) and updates the running estimates with
// momentum; eval mode applies the running estimates.
class BatchNorm1d {
public:
    BatchNorm1d(int64_t channels, const std::string& name, double momentum = 0.1,
                double eps = 1e-5);

    Tensor forward(const Tensor& x, Mode mode);
    Tensor backward(const Tensor& grad_out);

    Parameter gamma;  // C
    Parameter beta;   // C
    std::vector<double> running_mean;
    std::vector<double> running_var;

    double momentum() const { return momentum_; }
    double eps() const { return eps_; }
    const std::string& name() const { return name_; }
    int64_t channels() const { return channels_; }

private:
    std::string name_;
    int64_t channels_;
    double momentum_, eps_;
    Mode cached_mode_ = Mode::Train;
    Tensor cached_input_;
    std::vector<double> cached_mean_, cached_inv_std_;
};

class Relu {
public:
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& grad_out);

private:
    Tensor cached_input_;
};

// Max pooling over the last axis of B x C x L. With ceil_mode the final,
// possibly partial window is kept; gradient routes to the first argmax.
class MaxPool1d {
public:
    MaxPool1d(int64_t kernel, int64_t stride, bool ceil_mode = false);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& grad_out);

    int64_t out_length(int64_t in_length) const;

private:
    int64_t kernel_, stride_;
    bool ceil_mode_;
    std::vector<int64_t> cached_argmax_;
    std::vector<int64_t> cached_in_shape_;
};

// Inverted dropout: train mode zeroes entries with probability rate and
// scales survivors by 1/(1-rate); eval mode is the identity and consumes no
// randomness.
class Dropout {
public:
    explicit Dropout(double rate);

    Tensor forward(const Tensor& x, Mode mode, Rng& rng);
    Tensor backward(const Tensor& grad_out);

    double rate() const { return rate_; }

private:
    double rate_;
    std::vector<double> cached_mask_;
    bool cached_identity_ = true;
};

class Linear {
public:
    Linear(int64_t in_features, int64_t out_features, const std::string& name, Rng& init_rng);

    Tensor forward(const Tensor& x);  // B x in -> B x out
    Tensor backward(const Tensor& grad_out);

    Parameter weight;  // out x in
    Parameter bias;    // out

private:
    int64_t in_features_, out_features_;
    Tensor cached_input_;
};

class Flatten {
public:
    Tensor forward(const Tensor& x);  // B x ... -> B x rest
    Tensor backward(const Tensor& grad_out);

private:
    std::vector<int64_t> cached_shape_;
};

// ---------------------------------------------------------------------------
// Functional ops
// ---------------------------------------------------------------------------

// Row-wise stabilized softmax over B x 2.
Tensor softmax2(const Tensor& logits);
// Gradient through softmax2 given the forward output and dL/dp.
Tensor softmax2_backward(const Tensor& probs, const Tensor& grad_probs);

// Mean binary cross-entropy with probabilities clamped to
// [1e-7, 1 - 1e-7]; accepts soft targets.
double bce_loss(std::span<const double> p, std::span<const double> y);
std::vector<double> bce_loss_backward(std::span<const double> p, std::span<const double> y);

constexpr double kBceClamp = 1e-7;

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

struct AdamState {
    int64_t step = 0;
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double weight_decay = 5e-4;
    double eps = 1e-8;
    // per-parameter first/second moment buffers, keyed by parameter name
    std::unordered_map<std::string, std::pair<std::vector<double>, std::vector<double>>> moments;
};

// Standard Adam with bias correction; weight decay is decoupled
// (param -= lr * wd * param). Throws on a missing gradient.
void adam_step(const std::vector<Parameter*>& params, AdamState& state);

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

// Central finite differences at the given point, compared against
// analytic_grad coordinate by coordinate. Returns the max of
// |analytic - numeric| / max(|analytic|, |numeric|, 1).
double finite_difference_check(const std::function<double(std::span<const double>)>& f,
                               std::vector<double> point, std::span<const double> analytic_grad,
                               double eps = 1e-3);

}  // namespace capmix

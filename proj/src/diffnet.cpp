#include "capmix/diffnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace capmix {

Tensor::Tensor(std::vector<int64_t> s, double fill) : shape(std::move(s)) {
    int64_t n = 1;
    for (int64_t d : shape) {
        if (d < 0) throw std::invalid_argument("Tensor: negative dimension");
        n *= d;
    }
    values.assign(static_cast<size_t>(n), fill);
}

int64_t Tensor::size() const { return static_cast<int64_t>(values.size()); }

void Tensor::ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
}

void Tensor::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

namespace {

void expect_rank(const Tensor& t, size_t rank, const char* who) {
    if (t.shape.size() != rank)
        throw std::invalid_argument(std::string(who) + ": unexpected tensor rank");
}

double uniform_sym(Rng& rng, double bound) { return (2.0 * rng.uniform() - 1.0) * bound; }

}  // namespace

// ---------------------------------------------------------------------------
// Conv1d
// ---------------------------------------------------------------------------

Conv1d::Conv1d(int64_t in_channels, int64_t out_channels, int64_t kernel, int64_t stride,
               int64_t padding, const std::string& name, Rng& init_rng)
    : in_channels_(in_channels),
      out_channels_(out_channels),
      kernel_(kernel),
      stride_(stride),
      padding_(padding) {
    if (in_channels < 1 || out_channels < 1 || kernel < 1 || stride < 1 || padding < 0)
        throw std::invalid_argument("Conv1d: invalid configuration");
    weight.name = name + ".weight";
    weight.tensor = Tensor({out_channels, in_channels, kernel});
    bias.name = name + ".bias";
    bias.tensor = Tensor({out_channels});
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_channels * kernel));
    for (double& v : weight.tensor.values) v = uniform_sym(init_rng, bound);
}

int64_t Conv1d::out_length(int64_t in_length) const {
    const int64_t padded = in_length + 2 * padding_;
    if (kernel_ > padded) return 0;
    return (padded - kernel_) / stride_ + 1;
}

Tensor Conv1d::forward(const Tensor& x) {
    expect_rank(x, 3, "Conv1d");
    const int64_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
    if (C != in_channels_) throw std::invalid_argument("Conv1d: channel mismatch");
    const int64_t Lo = out_length(L);
    if (Lo < 1) throw std::invalid_argument("Conv1d: input too short for kernel");
    cached_input_ = x;

    Tensor y({B, out_channels_, Lo});
    const double* w = weight.tensor.values.data();
    for (int64_t b = 0; b < B; ++b)
        for (int64_t co = 0; co < out_channels_; ++co) {
            double* yrow = y.values.data() + (b * out_channels_ + co) * Lo;
            for (int64_t o = 0; o < Lo; ++o) yrow[o] = bias.tensor.values[co];
            for (int64_t ci = 0; ci < in_channels_; ++ci) {
                const double* xrow = x.values.data() + (b * C + ci) * L;
                const double* wrow = w + (co * in_channels_ + ci) * kernel_;
                for (int64_t o = 0; o < Lo; ++o) {
                    const int64_t base = o * stride_ - padding_;
                    double acc = 0.0;
                    for (int64_t k = 0; k < kernel_; ++k) {
                        const int64_t j = base + k;
                        if (j >= 0 && j < L) acc += wrow[k] * xrow[j];
                    }
                    yrow[o] += acc;
                }
            }
        }
    return y;
}

Tensor Conv1d::backward(const Tensor& grad_out) {
    const Tensor& x = cached_input_;
    if (x.shape.empty()) throw std::runtime_error("Conv1d: backward before forward");
    const int64_t B = x.dim(0), L = x.dim(2);
    const int64_t Lo = grad_out.dim(2);
    weight.tensor.ensure_grad();
    bias.tensor.ensure_grad();

    Tensor gx(x.shape);
    const double* w = weight.tensor.values.data();
    for (int64_t b = 0; b < B; ++b)
        for (int64_t co = 0; co < out_channels_; ++co) {
            const double* grow = grad_out.values.data() + (b * out_channels_ + co) * Lo;
            for (int64_t o = 0; o < Lo; ++o) bias.tensor.grad[co] += grow[o];
            for (int64_t ci = 0; ci < in_channels_; ++ci) {
                const double* xrow = x.values.data() + (b * in_channels_ + ci) * L;
                const double* wrow = w + (co * in_channels_ + ci) * kernel_;
                double* gw = weight.tensor.grad.data() + (co * in_channels_ + ci) * kernel_;
                double* gxrow = gx.values.data() + (b * in_channels_ + ci) * L;
                for (int64_t o = 0; o < Lo; ++o) {
                    const int64_t base = o * stride_ - padding_;
                    const double g = grow[o];
                    if (g == 0.0) continue;
                    for (int64_t k = 0; k < kernel_; ++k) {
                        const int64_t j = base + k;
                        if (j < 0 || j >= L) continue;
                        gw[k] += g * xrow[j];
                        gxrow[j] += g * wrow[k];
                    }
                }
            }
        }
    return gx;
}

// ---------------------------------------------------------------------------
// BatchNorm1d
// ---------------------------------------------------------------------------

BatchNorm1d::BatchNorm1d(int64_t channels, const std::string& name, double momentum, double eps)
    : name_(name), channels_(channels), momentum_(momentum), eps_(eps) {
    if (channels < 1) throw std::invalid_argument("BatchNorm1d: invalid channel count");
    gamma.name = name + ".gamma";
    gamma.tensor = Tensor({channels}, 1.0);
    beta.name = name + ".beta";
    beta.tensor = Tensor({channels}, 0.0);
    running_mean.assign(static_cast<size_t>(channels), 0.0);
    running_var.assign(static_cast<size_t>(channels), 1.0);
}

Tensor BatchNorm1d::forward(const Tensor& x, Mode mode) {
    expect_rank(x, 3, "BatchNorm1d");
    const int64_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
    if (C != channels_) throw std::invalid_argument("BatchNorm1d: channel mismatch");
    if (mode == Mode::Train && B < 2)
        throw std::invalid_argument("BatchNorm1d: train mode needs batch size >= 2");
    cached_mode_ = mode;
    cached_input_ = x;
    cached_mean_.assign(static_cast<size_t>(C), 0.0);
    cached_inv_std_.assign(static_cast<size_t>(C), 0.0);

    const double n = static_cast<double>(B * L);
    Tensor y(x.shape);
    for (int64_t c = 0; c < C; ++c) {
        double mean, var;
        if (mode == Mode::Train) {
            double sum = 0.0;
            for (int64_t b = 0; b < B; ++b) {
                const double* row = x.values.data() + (b * C + c) * L;
                for (int64_t i = 0; i < L; ++i) sum += row[i];
            }
            mean = sum / n;
            double sq = 0.0;
            for (int64_t b = 0; b < B; ++b) {
                const double* row = x.values.data() + (b * C + c) * L;
                for (int64_t i = 0; i < L; ++i) {
                    const double d = row[i] - mean;
                    sq += d * d;
                }
            }
            var = sq / n;
            running_mean[c] = (1.0 - momentum_) * running_mean[c] + momentum_ * mean;
            running_var[c] = (1.0 - momentum_) * running_var[c] + momentum_ * var;
        } else {
            mean = running_mean[c];
            var = running_var[c];
        }
        const double inv_std = 1.0 / std::sqrt(var + eps_);
        cached_mean_[c] = mean;
        cached_inv_std_[c] = inv_std;
        const double g = gamma.tensor.values[c], bt = beta.tensor.values[c];
        for (int64_t b = 0; b < B; ++b) {
            const double* row = x.values.data() + (b * C + c) * L;
            double* orow = y.values.data() + (b * C + c) * L;
            for (int64_t i = 0; i < L; ++i) orow[i] = g * (row[i] - mean) * inv_std + bt;
        }
    }
    return y;
}

Tensor BatchNorm1d::backward(const Tensor& grad_out) {
    const Tensor& x = cached_input_;
    if (x.shape.empty()) throw std::runtime_error("BatchNorm1d: backward before forward");
    const int64_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
    gamma.tensor.ensure_grad();
    beta.tensor.ensure_grad();

    const double n = static_cast<double>(B * L);
    Tensor gx(x.shape);
    for (int64_t c = 0; c < C; ++c) {
        const double mean = cached_mean_[c], inv_std = cached_inv_std_[c];
        const double g = gamma.tensor.values[c];
        double sum_gy = 0.0, sum_gy_xhat = 0.0;
        for (int64_t b = 0; b < B; ++b) {
            const double* xrow = x.values.data() + (b * C + c) * L;
            const double* grow = grad_out.values.data() + (b * C + c) * L;
            for (int64_t i = 0; i < L; ++i) {
                const double xhat = (xrow[i] - mean) * inv_std;
                sum_gy += grow[i];
                sum_gy_xhat += grow[i] * xhat;
            }
        }
        gamma.tensor.grad[c] += sum_gy_xhat;
        beta.tensor.grad[c] += sum_gy;

        for (int64_t b = 0; b < B; ++b) {
            const double* xrow = x.values.data() + (b * C + c) * L;
            const double* grow = grad_out.values.data() + (b * C + c) * L;
            double* gxrow = gx.values.data() + (b * C + c) * L;
            for (int64_t i = 0; i < L; ++i) {
                if (cached_mode_ == Mode::Train) {
                    const double xhat = (xrow[i] - mean) * inv_std;
                    gxrow[i] =
                        g * inv_std * (grow[i] - sum_gy / n - xhat * sum_gy_xhat / n);
                } else {
                    gxrow[i] = g * inv_std * grow[i];
                }
            }
        }
    }
    return gx;
}

// ---------------------------------------------------------------------------
// Relu / MaxPool1d / Dropout / Linear / Flatten
// ---------------------------------------------------------------------------

Tensor Relu::forward(const Tensor& x) {
    cached_input_ = x;
    Tensor y = x;
    for (double& v : y.values) v = v > 0.0 ? v : 0.0;
    return y;
}

Tensor Relu::backward(const Tensor& grad_out) {
    Tensor gx = grad_out;
    for (size_t i = 0; i < gx.values.size(); ++i)
        if (cached_input_.values[i] <= 0.0) gx.values[i] = 0.0;
    return gx;
}

MaxPool1d::MaxPool1d(int64_t kernel, int64_t stride, bool ceil_mode)
    : kernel_(kernel), stride_(stride), ceil_mode_(ceil_mode) {
    if (kernel < 1 || stride < 1) throw std::invalid_argument("MaxPool1d: invalid configuration");
}

int64_t MaxPool1d::out_length(int64_t in_length) const {
    if (in_length < 1) return 0;
    if (!ceil_mode_) {
        if (in_length < kernel_) return 0;
        return (in_length - kernel_) / stride_ + 1;
    }
    // ceil mode: allow a trailing partial window that still starts in range
    const int64_t num = in_length - kernel_;
    int64_t o = (num >= 0 ? (num + stride_ - 1) / stride_ : 0) + 1;
    while ((o - 1) * stride_ >= in_length) --o;
    return o;
}

Tensor MaxPool1d::forward(const Tensor& x) {
    expect_rank(x, 3, "MaxPool1d");
    const int64_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
    const int64_t Lo = out_length(L);
    if (Lo < 1) throw std::invalid_argument("MaxPool1d: input too short");
    cached_in_shape_ = x.shape;
    cached_argmax_.assign(static_cast<size_t>(B * C * Lo), 0);

    Tensor y({B, C, Lo});
    for (int64_t b = 0; b < B; ++b)
        for (int64_t c = 0; c < C; ++c) {
            const double* row = x.values.data() + (b * C + c) * L;
            double* orow = y.values.data() + (b * C + c) * Lo;
            int64_t* arow = cached_argmax_.data() + (b * C + c) * Lo;
            for (int64_t o = 0; o < Lo; ++o) {
                const int64_t lo = o * stride_;
                const int64_t hi = std::min(lo + kernel_, L);
                int64_t best = lo;
                double best_v = row[lo];
                for (int64_t j = lo + 1; j < hi; ++j)
                    if (row[j] > best_v) {  // first occurrence wins ties
                        best_v = row[j];
                        best = j;
                    }
                orow[o] = best_v;
                arow[o] = best;
            }
        }
    return y;
}

Tensor MaxPool1d::backward(const Tensor& grad_out) {
    if (cached_in_shape_.empty()) throw std::runtime_error("MaxPool1d: backward before forward");
    const int64_t B = cached_in_shape_[0], C = cached_in_shape_[1], L = cached_in_shape_[2];
    const int64_t Lo = grad_out.dim(2);
    Tensor gx(cached_in_shape_);
    for (int64_t b = 0; b < B; ++b)
        for (int64_t c = 0; c < C; ++c) {
            const double* grow = grad_out.values.data() + (b * C + c) * Lo;
            const int64_t* arow = cached_argmax_.data() + (b * C + c) * Lo;
            double* gxrow = gx.values.data() + (b * C + c) * L;
            for (int64_t o = 0; o < Lo; ++o) gxrow[arow[o]] += grow[o];
        }
    return gx;
}

Dropout::Dropout(double rate) : rate_(rate) {
    if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("Dropout: rate must be in [0, 1)");
}

Tensor Dropout::forward(const Tensor& x, Mode mode, Rng& rng) {
    if (mode == Mode::Eval || rate_ == 0.0) {
        cached_identity_ = true;
        return x;
    }
    cached_identity_ = false;
    cached_mask_.resize(x.values.size());
    const double scale = 1.0 / (1.0 - rate_);
    Tensor y = x;
    for (size_t i = 0; i < y.values.size(); ++i) {
        const double keep = rng.uniform() >= rate_ ? scale : 0.0;
        cached_mask_[i] = keep;
        y.values[i] *= keep;
    }
    return y;
}

Tensor Dropout::backward(const Tensor& grad_out) {
    if (cached_identity_) return grad_out;
    Tensor gx = grad_out;
    for (size_t i = 0; i < gx.values.size(); ++i) gx.values[i] *= cached_mask_[i];
    return gx;
}

Linear::Linear(int64_t in_features, int64_t out_features, const std::string& name, Rng& init_rng)
    : in_features_(in_features), out_features_(out_features) {
    if (in_features < 1 || out_features < 1)
        throw std::invalid_argument("Linear: invalid configuration");
    weight.name = name + ".weight";
    weight.tensor = Tensor({out_features, in_features});
    bias.name = name + ".bias";
    bias.tensor = Tensor({out_features});
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_features));
    for (double& v : weight.tensor.values) v = uniform_sym(init_rng, bound);
}

Tensor Linear::forward(const Tensor& x) {
    expect_rank(x, 2, "Linear");
    const int64_t B = x.dim(0);
    if (x.dim(1) != in_features_) throw std::invalid_argument("Linear: feature mismatch");
    cached_input_ = x;
    Tensor y({B, out_features_});
    for (int64_t b = 0; b < B; ++b) {
        const double* xrow = x.values.data() + b * in_features_;
        double* yrow = y.values.data() + b * out_features_;
        for (int64_t o = 0; o < out_features_; ++o) {
            const double* wrow = weight.tensor.values.data() + o * in_features_;
            double acc = bias.tensor.values[o];
            for (int64_t i = 0; i < in_features_; ++i) acc += wrow[i] * xrow[i];
            yrow[o] = acc;
        }
    }
    return y;
}

Tensor Linear::backward(const Tensor& grad_out) {
    const Tensor& x = cached_input_;
    if (x.shape.empty()) throw std::runtime_error("Linear: backward before forward");
    const int64_t B = x.dim(0);
    weight.tensor.ensure_grad();
    bias.tensor.ensure_grad();
    Tensor gx(x.shape);
    for (int64_t b = 0; b < B; ++b) {
        const double* xrow = x.values.data() + b * in_features_;
        const double* grow = grad_out.values.data() + b * out_features_;
        double* gxrow = gx.values.data() + b * in_features_;
        for (int64_t o = 0; o < out_features_; ++o) {
            const double g = grow[o];
            bias.tensor.grad[o] += g;
            const double* wrow = weight.tensor.values.data() + o * in_features_;
            double* gwrow = weight.tensor.grad.data() + o * in_features_;
            for (int64_t i = 0; i < in_features_; ++i) {
                gwrow[i] += g * xrow[i];
                gxrow[i] += g * wrow[i];
            }
        }
    }
    return gx;
}

Tensor Flatten::forward(const Tensor& x) {
    cached_shape_ = x.shape;
    int64_t rest = 1;
    for (size_t i = 1; i < x.shape.size(); ++i) rest *= x.shape[i];
    Tensor y = x;
    y.shape = {x.shape[0], rest};
    return y;
}

Tensor Flatten::backward(const Tensor& grad_out) {
    Tensor gx = grad_out;
    gx.shape = cached_shape_;
    return gx;
}

// ---------------------------------------------------------------------------
// softmax2 / bce
// ---------------------------------------------------------------------------

Tensor softmax2(const Tensor& logits) {
    expect_rank(logits, 2, "softmax2");
    const int64_t B = logits.dim(0), K = logits.dim(1);
    Tensor p(logits.shape);
    for (int64_t b = 0; b < B; ++b) {
        const double* q = logits.values.data() + b * K;
        double* out = p.values.data() + b * K;
        double mx = q[0];
        for (int64_t k = 1; k < K; ++k) mx = std::max(mx, q[k]);
        double denom = 0.0;
        for (int64_t k = 0; k < K; ++k) {
            out[k] = std::exp(q[k] - mx);
            denom += out[k];
        }
        for (int64_t k = 0; k < K; ++k) out[k] /= denom;
    }
    return p;
}

Tensor softmax2_backward(const Tensor& probs, const Tensor& grad_probs) {
    const int64_t B = probs.dim(0), K = probs.dim(1);
    Tensor gq(probs.shape);
    for (int64_t b = 0; b < B; ++b) {
        const double* p = probs.values.data() + b * K;
        const double* gp = grad_probs.values.data() + b * K;
        double dot = 0.0;
        for (int64_t k = 0; k < K; ++k) dot += gp[k] * p[k];
        double* out = gq.values.data() + b * K;
        for (int64_t k = 0; k < K; ++k) out[k] = p[k] * (gp[k] - dot);
    }
    return gq;
}

double bce_loss(std::span<const double> p, std::span<const double> y) {
    if (p.size() != y.size() || p.empty()) throw std::invalid_argument("bce_loss: size mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        const double pc = std::clamp(p[i], kBceClamp, 1.0 - kBceClamp);
        acc += y[i] * std::log(pc) + (1.0 - y[i]) * std::log(1.0 - pc);
    }
    return -acc / static_cast<double>(p.size());
}

std::vector<double> bce_loss_backward(std::span<const double> p, std::span<const double> y) {
    if (p.size() != y.size() || p.empty())
        throw std::invalid_argument("bce_loss_backward: size mismatch");
    std::vector<double> g(p.size(), 0.0);
    const double n = static_cast<double>(p.size());
    for (size_t i = 0; i < p.size(); ++i) {
        if (p[i] < kBceClamp || p[i] > 1.0 - kBceClamp) continue;  // clamped: zero gradient
        g[i] = (p[i] - y[i]) / (p[i] * (1.0 - p[i])) / n;
    }
    return g;
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

void adam_step(const std::vector<Parameter*>& params, AdamState& state) {
    if (state.beta1 <= 0.0 || state.beta1 >= 1.0 || state.beta2 <= 0.0 || state.beta2 >= 1.0)
        throw std::invalid_argument("adam_step: betas must lie in (0, 1)");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

    for (Parameter* p : params) {
        if (!p->requires_grad) continue;
        if (p->tensor.grad.size() != p->tensor.values.size())
            throw std::runtime_error("adam_step: parameter '" + p->name + "' has no gradient");
        auto& [m, v] = state.moments[p->name];
        if (m.size() != p->tensor.values.size()) {
            m.assign(p->tensor.values.size(), 0.0);
            v.assign(p->tensor.values.size(), 0.0);
        }
        for (size_t i = 0; i < p->tensor.values.size(); ++i) {
            const double g = p->tensor.grad[i];
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            p->tensor.values[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
            p->tensor.values[i] -= state.lr * state.weight_decay * p->tensor.values[i];
        }
    }
}

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

double finite_difference_check(const std::function<double(std::span<const double>)>& f,
                               std::vector<double> point, std::span<const double> analytic_grad,
                               double eps) {
    if (point.size() != analytic_grad.size())
        throw std::invalid_argument("finite_difference_check: gradient size mismatch");
    double worst = 0.0;
    for (size_t i = 0; i < point.size(); ++i) {
        const double saved = point[i];
        point[i] = saved + eps;
        const double hi = f(point);
        point[i] = saved - eps;
        const double lo = f(point);
        point[i] = saved;
        const double numeric = (hi - lo) / (2.0 * eps);
        const double analytic = analytic_grad[i];
        const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1.0});
        worst = std::max(worst, std::fabs(analytic - numeric) / denom);
    }
    return worst;
}

}  // namespace capmix

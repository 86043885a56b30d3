#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stockcast/dataset.hpp"
#include "stockcast/rng.hpp"
#include "stockcast/tape.hpp"

namespace stockcast::nn {

/// Architecture of the encoder-decoder network. Defaults are the reference
/// configuration: 4 attention heads, d_model 64, 5 bidirectional LSTM layers
/// of hidden size 64, lookback 20, dropout 0.3.
struct ModelConfig {
    std::size_t lookback = 20;
    std::size_t features = 8;
    std::size_t d_model = 64;
    std::size_t heads = 4;
    std::size_t layers = 5;
    std::size_t hidden = 64;
    bool use_attention = true;
    bool use_conv = true;
    bool bidirectional = true;
    bool multi_scale_conv = false;  // conv block uses {3,5} kernels instead of {3}
    bool causal_mask = false;       // optional masked attention, off by default
    double dropout = 0.3;

    /// Width of the decoder feature vector (2*hidden when bidirectional).
    std::size_t feature_width() const { return bidirectional ? 2 * hidden : hidden; }
    /// Channel width entering the decoder.
    std::size_t context_width() const {
        return (use_attention || use_conv) ? d_model : features;
    }
};

/// Optimization settings for train().
struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    double learning_rate = 0.01;
    double grad_clip_norm = 1.0;  // global L2 clip; 0 disables
    std::uint64_t seed = 0;
};

/// One self-attention head's projection weights, bound to a tape.
struct AttentionHead {
    ad::Var wq, wk, wv;
};

/// H = softmax(Q K^T / sqrt(d_key)) V with rows as queries; every query's
/// weights over the keys form a probability distribution. The causal flag
/// masks keys after the query's position (requires Lq == Lk).
ad::Var scaled_dot_attention(ad::Tape& tape, ad::Var q, ad::Var k, ad::Var v,
                             bool causal = false);

/// Self-attention per head on x (L x d_in), outputs concatenated along the
/// feature axis to width heads * d_head.
ad::Var multi_head_self_attention(ad::Tape& tape, ad::Var x,
                                  std::span<const AttentionHead> heads,
                                  bool causal = false);

/// The pretraining network: attention/conv encoder, stacked (bi)LSTM decoder,
/// affine output head. Parameters are named tensors; the name order is the
/// canonical iteration order for the optimizer and checkpoints.
class Seq2SeqModel {
public:
    Seq2SeqModel() = default;
    Seq2SeqModel(ModelConfig cfg, std::map<std::string, ad::Tensor> params);

    /// Fresh model with uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and
    /// forget-gate biases at 1.
    static Seq2SeqModel init(const ModelConfig& cfg, std::uint64_t seed);

    const ModelConfig& config() const { return cfg_; }
    std::map<std::string, ad::Tensor>& params() { return params_; }
    const std::map<std::string, ad::Tensor>& params() const { return params_; }

private:
    ModelConfig cfg_;
    std::map<std::string, ad::Tensor> params_;
};

/// Model parameters materialized as leaves on a tape for one forward pass
/// (and backward pass, when requires_grad is set).
class BoundModel {
public:
    BoundModel(ad::Tape& tape, const Seq2SeqModel& model, bool requires_grad);

    ad::Var var(const std::string& name) const;
    const Seq2SeqModel& model() const { return *model_; }

    /// Encoder for one window (lookback x features) -> (lookback x d_model).
    /// Identity when the config has neither attention nor conv.
    ad::Var encode(ad::Var window, bool train, Rng& dropout_rng) const;

    struct Output {
        ad::Var prediction;  // (B x 1)
        ad::Var features;    // (B x feature_width)
    };

    /// Decoder + head over per-step batch inputs (each (B x context_width)).
    Output decode_steps(std::span<const ad::Var> step_inputs) const;

    /// Full forward for the dataset windows selected by `indices`.
    Output forward(const WindowedDataset& data, std::span<const std::size_t> indices,
                   bool train, Rng& dropout_rng) const;

private:
    ad::Tape* tape_;
    const Seq2SeqModel* model_;
    std::map<std::string, ad::Var> vars_;
};

// ---- optimizer ----

struct AdamConfig {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::map<std::string, std::pair<ad::Tensor, ad::Tensor>> moments;  // m, v
    std::size_t step = 0;
};

/// Standard Adam update with bias correction; state advances by one step.
/// Errors: ShapeMismatch if a gradient shape disagrees with its parameter.
void adam_step(std::map<std::string, ad::Tensor>& params,
               const std::map<std::string, ad::Tensor>& grads, AdamState& state,
               const AdamConfig& cfg);

// ---- training / inference ----

struct TrainResult {
    std::vector<double> loss_history;  // one mean train MSE per epoch
};

/// Minimizes MSE over shuffled mini-batches for cfg.epochs epochs. Fully
/// deterministic for a given seed. Errors: EmptyDataset; NonFiniteValue is
/// rethrown with epoch/batch context.
TrainResult train(Seq2SeqModel& model, const WindowedDataset& data,
                  const TrainConfig& cfg);

struct EvalOutput {
    double prediction = 0;
    std::vector<double> features;
};

/// Eval-mode forward for a single window (lookback*features, row-major).
EvalOutput predict_window(const Seq2SeqModel& model, std::span<const double> window);

/// Eval-mode forward over a whole dataset, batched internally.
std::vector<EvalOutput> predict_dataset(const Seq2SeqModel& model,
                                        const WindowedDataset& data);

}  // namespace stockcast::nn

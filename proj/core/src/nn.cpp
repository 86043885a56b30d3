#include "stockcast/nn.hpp"

#include <cmath>
#include <numeric>

#include "stockcast/errors.hpp"

namespace stockcast::nn {

using ad::Tensor;
using ad::Var;

namespace {

constexpr double kMaskOff = -1e30;

void check_model_config(const ModelConfig& cfg) {
    if (cfg.lookback == 0 || cfg.features == 0 || cfg.hidden == 0 || cfg.layers == 0) {
        raise(ErrorKind::BadParams, "model dimensions must be positive");
    }
    if (cfg.dropout < 0 || cfg.dropout >= 1) {
        raise(ErrorKind::BadParams, "dropout must be in [0,1)");
    }
    if (cfg.use_attention) {
        if (cfg.heads == 0 || cfg.d_model % cfg.heads != 0) {
            raise(ErrorKind::BadParams, "head count must divide d_model");
        }
    }
    if ((cfg.use_attention || cfg.use_conv) && cfg.d_model < 2) {
        raise(ErrorKind::BadParams, "d_model too small");
    }
}

}  // namespace

Var scaled_dot_attention(ad::Tape& t, Var q, Var k, Var v, bool causal) {
    const Tensor& tq = t.value(q);
    const Tensor& tk = t.value(k);
    const Tensor& tv = t.value(v);
    if (tq.rank() != 2 || tk.rank() != 2 || tv.rank() != 2 || tq.cols() != tk.cols() ||
        tk.rows() != tv.rows()) {
        raise(ErrorKind::ShapeMismatch, "attention expects q (Lq x d), k (Lk x d), v (Lk x dv)");
    }
    Var scores = t.scale(t.matmul(q, t.transpose(k)),
                         1.0 / std::sqrt(static_cast<double>(tq.cols())));
    if (causal) {
        if (tq.rows() != tk.rows()) {
            raise(ErrorKind::ShapeMismatch, "causal mask requires Lq == Lk");
        }
        Tensor mask({tq.rows(), tk.rows()});
        for (std::size_t i = 0; i < tq.rows(); ++i) {
            for (std::size_t j = i + 1; j < tk.rows(); ++j) mask.at(i, j) = kMaskOff;
        }
        scores = t.add(scores, t.leaf(std::move(mask)));
    }
    return t.matmul(t.softmax(scores, 1), v);
}

Var multi_head_self_attention(ad::Tape& t, Var x, std::span<const AttentionHead> heads,
                              bool causal) {
    if (heads.empty()) raise(ErrorKind::ShapeMismatch, "attention needs at least one head");
    std::vector<Var> outs;
    outs.reserve(heads.size());
    for (const AttentionHead& h : heads) {
        Var q = t.matmul(x, h.wq);
        Var k = t.matmul(x, h.wk);
        Var v = t.matmul(x, h.wv);
        outs.push_back(scaled_dot_attention(t, q, k, v, causal));
    }
    if (outs.size() == 1) return outs[0];
    return t.concat(outs, 1);
}

// ------------------------------------------------------------ Seq2SeqModel

Seq2SeqModel::Seq2SeqModel(ModelConfig cfg, std::map<std::string, ad::Tensor> params)
    : cfg_(cfg), params_(std::move(params)) {
    check_model_config(cfg_);
}

Seq2SeqModel Seq2SeqModel::init(const ModelConfig& cfg, std::uint64_t seed) {
    check_model_config(cfg);
    Rng rng(seed);
    std::map<std::string, Tensor> p;

    auto uniform_init = [&rng](std::vector<std::size_t> shape, std::size_t fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        return Tensor::uniform(std::move(shape), rng, -bound, bound);
    };

    if (cfg.use_attention) {
        const std::size_t d_head = cfg.d_model / cfg.heads;
        for (std::size_t h = 0; h < cfg.heads; ++h) {
            const std::string base = "enc.h" + std::to_string(h) + ".";
            p[base + "wq"] = uniform_init({cfg.features, d_head}, cfg.features);
            p[base + "wk"] = uniform_init({cfg.features, d_head}, cfg.features);
            p[base + "wv"] = uniform_init({cfg.features, d_head}, cfg.features);
        }
        p["enc.proj.w"] = uniform_init({cfg.d_model, cfg.d_model}, cfg.d_model);
        p["enc.proj.b"] = Tensor({1, cfg.d_model});
    }

    if (cfg.use_conv) {
        const std::size_t cin = cfg.use_attention ? cfg.d_model : cfg.features;
        if (cfg.multi_scale_conv) {
            const std::size_t half = cfg.d_model / 2;
            p["enc.conv1a.w"] = uniform_init({half, cin, 3}, cin * 3);
            p["enc.conv1a.b"] = Tensor({1, half});
            p["enc.conv1b.w"] = uniform_init({cfg.d_model - half, cin, 5}, cin * 5);
            p["enc.conv1b.b"] = Tensor({1, cfg.d_model - half});
        } else {
            p["enc.conv1.w"] = uniform_init({cfg.d_model, cin, 3}, cin * 3);
            p["enc.conv1.b"] = Tensor({1, cfg.d_model});
        }
        p["enc.conv2.w"] = uniform_init({cfg.d_model, cfg.d_model, 3}, cfg.d_model * 3);
        p["enc.conv2.b"] = Tensor({1, cfg.d_model});
    }

    const std::size_t h4 = 4 * cfg.hidden;
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        const std::size_t d_in =
            l == 0 ? cfg.context_width() : (cfg.bidirectional ? 2 * cfg.hidden : cfg.hidden);
        const int dirs = cfg.bidirectional ? 2 : 1;
        for (int dir = 0; dir < dirs; ++dir) {
            const std::string base =
                "dec.l" + std::to_string(l) + (dir == 0 ? ".f." : ".b.");
            p[base + "wx"] = uniform_init({d_in, h4}, d_in);
            p[base + "wh"] = uniform_init({cfg.hidden, h4}, cfg.hidden);
            Tensor bias({1, h4});
            for (std::size_t i = cfg.hidden; i < 2 * cfg.hidden; ++i) bias[i] = 1.0;
            p[base + "b"] = std::move(bias);
        }
    }

    p["head.w"] = uniform_init({cfg.feature_width(), 1}, cfg.feature_width());
    p["head.b"] = Tensor({1, 1});

    return Seq2SeqModel(cfg, std::move(p));
}

// ------------------------------------------------------------ BoundModel

BoundModel::BoundModel(ad::Tape& tape, const Seq2SeqModel& model, bool requires_grad)
    : tape_(&tape), model_(&model) {
    for (const auto& [name, tensor] : model.params()) {
        vars_.emplace(name, tape.leaf(tensor, requires_grad));
    }
}

Var BoundModel::var(const std::string& name) const {
    auto it = vars_.find(name);
    if (it == vars_.end()) raise(ErrorKind::BadParams, "unknown parameter " + name);
    return it->second;
}

Var BoundModel::encode(Var window, bool train, Rng& dropout_rng) const {
    const ModelConfig& cfg = model_->config();
    ad::Tape& t = *tape_;
    Var cur = window;

    if (cfg.use_attention) {
        std::vector<AttentionHead> heads(cfg.heads);
        for (std::size_t h = 0; h < cfg.heads; ++h) {
            const std::string base = "enc.h" + std::to_string(h) + ".";
            heads[h] = AttentionHead{var(base + "wq"), var(base + "wk"), var(base + "wv")};
        }
        Var mha = multi_head_self_attention(t, cur, heads, cfg.causal_mask);
        cur = t.add(t.matmul(mha, var("enc.proj.w")), var("enc.proj.b"));
        cur = t.dropout(cur, cfg.dropout, dropout_rng, train);
    }

    if (cfg.use_conv) {
        Var u;
        if (cfg.multi_scale_conv) {
            Var a = t.conv1d(cur, var("enc.conv1a.w"), var("enc.conv1a.b"));
            Var b = t.conv1d(cur, var("enc.conv1b.w"), var("enc.conv1b.b"));
            const Var parts[2] = {a, b};
            u = t.relu(t.concat(parts, 1));
        } else {
            u = t.relu(t.conv1d(cur, var("enc.conv1.w"), var("enc.conv1.b")));
        }
        Var v = t.conv1d(u, var("enc.conv2.w"), var("enc.conv2.b"));
        // Residual from the block input when widths line up, else from the
        // first conv stage (the no-attention path lifts features to d_model).
        Var res = t.value(cur).cols() == cfg.d_model ? cur : u;
        cur = t.relu(t.add(v, res));
        cur = t.dropout(cur, cfg.dropout, dropout_rng, train);
    }

    return cur;
}

BoundModel::Output BoundModel::decode_steps(std::span<const ad::Var> step_inputs) const {
    const ModelConfig& cfg = model_->config();
    ad::Tape& t = *tape_;
    const std::size_t steps = step_inputs.size();
    if (steps == 0) raise(ErrorKind::ShapeMismatch, "decoder needs at least one step");
    const std::size_t batch = t.value(step_inputs[0]).rows();

    std::vector<Var> inputs(step_inputs.begin(), step_inputs.end());
    Var fwd_final{}, bwd_final{};

    for (std::size_t l = 0; l < cfg.layers; ++l) {
        const std::string lbase = "dec.l" + std::to_string(l);
        std::vector<Var> fwd_h(steps), bwd_h(steps);

        auto run_direction = [&](const std::string& base, bool reverse,
                                 std::vector<Var>& out_h) -> Var {
            const Var wx = var(base + "wx");
            const Var wh = var(base + "wh");
            const Var b = var(base + "b");
            Var h = t.leaf(Tensor({batch, cfg.hidden}));
            Var c = t.leaf(Tensor({batch, cfg.hidden}));
            for (std::size_t i = 0; i < steps; ++i) {
                const std::size_t step = reverse ? steps - 1 - i : i;
                Var pre = t.add(t.add(t.matmul(inputs[step], wx), t.matmul(h, wh)), b);
                Var in_g = t.sigmoid(t.slice(pre, 1, 0, cfg.hidden));
                Var forget_g = t.sigmoid(t.slice(pre, 1, cfg.hidden, cfg.hidden));
                Var cand = t.tanh(t.slice(pre, 1, 2 * cfg.hidden, cfg.hidden));
                Var out_g = t.sigmoid(t.slice(pre, 1, 3 * cfg.hidden, cfg.hidden));
                c = t.add(t.mul(forget_g, c), t.mul(in_g, cand));
                h = t.mul(out_g, t.tanh(c));
                out_h[step] = h;
            }
            return h;  // final state of this direction
        };

        Var f_final = run_direction(lbase + ".f.", false, fwd_h);
        if (cfg.bidirectional) {
            Var b_final = run_direction(lbase + ".b.", true, bwd_h);
            std::vector<Var> next(steps);
            for (std::size_t s = 0; s < steps; ++s) {
                const Var parts[2] = {fwd_h[s], bwd_h[s]};
                next[s] = t.concat(parts, 1);
            }
            inputs = std::move(next);
            fwd_final = f_final;
            bwd_final = b_final;
        } else {
            inputs = std::move(fwd_h);
            fwd_final = f_final;
        }
    }

    Var features = fwd_final;
    if (cfg.bidirectional) {
        const Var parts[2] = {fwd_final, bwd_final};
        features = t.concat(parts, 1);
    }
    Var prediction = t.add(t.matmul(features, var("head.w")), var("head.b"));
    return Output{prediction, features};
}

BoundModel::Output BoundModel::forward(const WindowedDataset& data,
                                       std::span<const std::size_t> indices, bool train,
                                       Rng& dropout_rng) const {
    const ModelConfig& cfg = model_->config();
    ad::Tape& t = *tape_;
    if (indices.empty()) raise(ErrorKind::EmptyDataset, "empty batch");
    if (data.feature_count != cfg.features || data.lookback != cfg.lookback) {
        raise(ErrorKind::ShapeMismatch, "dataset window shape does not match model config");
    }

    const std::size_t batch = indices.size();
    std::vector<Var> step_inputs(cfg.lookback);

    if (cfg.use_attention || cfg.use_conv) {
        std::vector<Var> encoded;
        encoded.reserve(batch);
        for (std::size_t b : indices) {
            Var window = t.leaf(Tensor({cfg.lookback, cfg.features}, data.inputs[b]));
            encoded.push_back(encode(window, train, dropout_rng));
        }
        for (std::size_t s = 0; s < cfg.lookback; ++s) {
            step_inputs[s] = t.stack_rows(encoded, s);
        }
    } else {
        for (std::size_t s = 0; s < cfg.lookback; ++s) {
            Tensor step({batch, cfg.features});
            for (std::size_t b = 0; b < batch; ++b) {
                const auto& w = data.inputs[indices[b]];
                std::copy(w.begin() + s * cfg.features, w.begin() + (s + 1) * cfg.features,
                          step.data() + b * cfg.features);
            }
            step_inputs[s] = t.leaf(std::move(step));
        }
    }

    return decode_steps(step_inputs);
}

// ------------------------------------------------------------ Adam

void adam_step(std::map<std::string, ad::Tensor>& params,
               const std::map<std::string, ad::Tensor>& grads, AdamState& state,
               const AdamConfig& cfg) {
    state.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (auto& [name, p] : params) {
        const auto git = grads.find(name);
        if (git == grads.end()) continue;  // parameter not touched this step
        const Tensor& g = git->second;
        if (!g.same_shape(p)) {
            raise(ErrorKind::ShapeMismatch, "gradient shape mismatch for " + name);
        }
        auto& [m, v] = state.moments[name];
        if (m.empty()) {
            m = Tensor(p.shape());
            v = Tensor(p.shape());
        }
        for (std::size_t i = 0; i < p.numel(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

// ------------------------------------------------------------ training

TrainResult train(Seq2SeqModel& model, const WindowedDataset& data,
                  const TrainConfig& cfg) {
    if (data.size() == 0) raise(ErrorKind::EmptyDataset, "no training windows");
    if (cfg.batch_size == 0 || cfg.epochs == 0) {
        raise(ErrorKind::BadParams, "epochs and batch_size must be positive");
    }

    Rng rng = Rng(cfg.seed).fork(1);
    AdamState adam;
    const AdamConfig adam_cfg{cfg.learning_rate, 0.9, 0.999, 1e-8};
    ad::Tape tape;

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    result.loss_history.reserve(cfg.epochs);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t bsz = std::min(cfg.batch_size, order.size() - start);
            const std::span<const std::size_t> batch(order.data() + start, bsz);
            try {
                tape.reset();
                BoundModel bound(tape, model, true);
                auto out = bound.forward(data, batch, true, rng);

                Tensor target({bsz, 1});
                for (std::size_t i = 0; i < bsz; ++i) target[i] = data.targets[batch[i]];
                Var loss = tape.mse_loss(out.prediction, tape.leaf(std::move(target)));
                const double loss_value = tape.value(loss)[0];
                tape.backward(loss);

                std::map<std::string, Tensor> grads;
                for (const auto& [name, tensor] : model.params()) {
                    grads.emplace(name, tape.grad(bound.var(name)));
                }
                if (cfg.grad_clip_norm > 0) {
                    double sq = 0;
                    for (const auto& [name, g] : grads) {
                        for (std::size_t i = 0; i < g.numel(); ++i) sq += g[i] * g[i];
                    }
                    const double norm = std::sqrt(sq);
                    if (norm > cfg.grad_clip_norm) {
                        const double s = cfg.grad_clip_norm / norm;
                        for (auto& [name, g] : grads) {
                            for (std::size_t i = 0; i < g.numel(); ++i) g[i] *= s;
                        }
                    }
                }
                adam_step(model.params(), grads, adam, adam_cfg);
                loss_sum += loss_value * static_cast<double>(bsz);
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::NonFiniteValue) {
                    raise(ErrorKind::NonFiniteValue,
                          "epoch " + std::to_string(epoch) + " batch " +
                              std::to_string(start / cfg.batch_size) + ": " + e.what());
                }
                throw;
            }
        }
        result.loss_history.push_back(loss_sum / static_cast<double>(data.size()));
    }
    tape.reset();
    return result;
}

EvalOutput predict_window(const Seq2SeqModel& model, std::span<const double> window) {
    const ModelConfig& cfg = model.config();
    if (window.size() != cfg.lookback * cfg.features) {
        raise(ErrorKind::ShapeMismatch, "window size does not match lookback*features");
    }
    WindowedDataset one;
    one.lookback = cfg.lookback;
    one.feature_count = cfg.features;
    one.inputs.emplace_back(window.begin(), window.end());
    one.targets.push_back(0);
    one.target_rows.push_back(0);
    return predict_dataset(model, one)[0];
}

std::vector<EvalOutput> predict_dataset(const Seq2SeqModel& model,
                                        const WindowedDataset& data) {
    constexpr std::size_t kEvalBatch = 256;
    std::vector<EvalOutput> out;
    out.reserve(data.size());
    ad::Tape tape;
    Rng unused(0);
    for (std::size_t start = 0; start < data.size(); start += kEvalBatch) {
        const std::size_t bsz = std::min(kEvalBatch, data.size() - start);
        std::vector<std::size_t> idx(bsz);
        std::iota(idx.begin(), idx.end(), start);
        tape.reset();
        BoundModel bound(tape, model, false);
        auto res = bound.forward(data, idx, false, unused);
        const Tensor& pred = tape.value(res.prediction);
        const Tensor& feat = tape.value(res.features);
        for (std::size_t b = 0; b < bsz; ++b) {
            EvalOutput eo;
            eo.prediction = pred.at(b, 0);
            eo.features.assign(feat.data() + b * feat.cols(),
                               feat.data() + (b + 1) * feat.cols());
            out.push_back(std::move(eo));
        }
    }
    return out;
}

}  // namespace stockcast::nn

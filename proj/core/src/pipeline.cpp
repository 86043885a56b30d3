#include "stockcast/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>

#include "stockcast/errors.hpp"

namespace stockcast::pipeline {

namespace {

template <typename F>
auto stage(const char* name, F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        throw Error(e.kind(), std::string(name) + ": " + e.what());
    }
}

std::string now_rfc3339() {
    const std::time_t t = std::time(nullptr);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

std::vector<std::string> indexed_names(const std::string& prefix, std::size_t n) {
    std::vector<std::string> names(n);
    for (std::size_t i = 0; i < n; ++i) names[i] = prefix + std::to_string(i);
    return names;
}

}  // namespace

nn::ModelConfig variant_model_config(const PipelineConfig& cfg, Variant v) {
    nn::ModelConfig m = cfg.model;
    switch (v) {
        case Variant::sl_lstm:
            m.use_attention = false;
            m.use_conv = false;
            m.bidirectional = false;
            m.layers = 1;
            break;
        case Variant::ml_lstm:
            m.use_attention = false;
            m.use_conv = false;
            m.bidirectional = false;
            break;
        case Variant::bilstm:
        case Variant::bilstm_xgb:
            m.use_attention = false;
            m.use_conv = false;
            m.bidirectional = true;
            break;
        case Variant::cnn_bilstm_xgb:
            m.use_attention = false;
            m.use_conv = true;
            m.bidirectional = true;
            break;
        case Variant::acnn_bilstm_xgb:
            m.use_attention = true;
            m.use_conv = true;
            m.bidirectional = true;
            break;
        default:
            break;
    }
    return m;
}

std::string to_string(Variant v) {
    switch (v) {
        case Variant::arima_only: return "arima_only";
        case Variant::xgb_only: return "xgb_only";
        case Variant::sl_lstm: return "sl_lstm";
        case Variant::ml_lstm: return "ml_lstm";
        case Variant::bilstm: return "bilstm";
        case Variant::bilstm_xgb: return "bilstm_xgb";
        case Variant::cnn_bilstm_xgb: return "cnn_bilstm_xgb";
        case Variant::acnn_bilstm_xgb: return "acnn_bilstm_xgb";
    }
    return "?";
}

Variant variant_from_string(const std::string& s) {
    for (Variant v : kAllVariants) {
        if (to_string(v) == s) return v;
    }
    raise(ErrorKind::BadParams, "unknown variant: " + s);
}

bool variant_uses_nn(Variant v) {
    return v != Variant::arima_only && v != Variant::xgb_only;
}

bool variant_uses_gbt(Variant v) {
    return v == Variant::xgb_only || v == Variant::bilstm_xgb ||
           v == Variant::cnn_bilstm_xgb || v == Variant::acnn_bilstm_xgb;
}

FeatureMatrix build_features(const OhlcvFrame& frame, const arima::ArModel& model) {
    const Series close = frame.close_series();
    auto [fitted, residuals] = arima::fitted_and_residuals(model, close);
    if (fitted.size() != frame.size()) {
        raise(ErrorKind::LengthMismatch, "fitted length does not match frame");
    }
    std::vector<std::vector<double>> cols(8);
    for (std::size_t i = 0; i < frame.size(); ++i) {
        const OhlcvBar& b = frame[i];
        cols[0].push_back(b.open);
        cols[1].push_back(b.high);
        cols[2].push_back(b.low);
        cols[3].push_back(b.close);
        cols[4].push_back(b.volume);
        cols[5].push_back(b.amount);
        cols[6].push_back(fitted[i]);
        cols[7].push_back(residuals[i]);
    }
    return FeatureMatrix::from_columns(
        {"open", "high", "low", "close", "volume", "amount", "arima_fitted",
         "arima_residual"},
        cols);
}

std::pair<FeatureMatrix, NormParams> normalize(const FeatureMatrix& features,
                                               std::size_t train_rows) {
    if (train_rows == 0 || train_rows > features.rows()) {
        raise(ErrorKind::SplitOutOfRange, "train span outside matrix");
    }
    NormParams norm;
    norm.names = features.names();
    norm.mins.resize(features.cols());
    norm.maxs.resize(features.cols());
    for (std::size_t c = 0; c < features.cols(); ++c) {
        double lo = features.at(0, c), hi = features.at(0, c);
        for (std::size_t r = 1; r < train_rows; ++r) {
            lo = std::min(lo, features.at(r, c));
            hi = std::max(hi, features.at(r, c));
        }
        if (hi <= lo) {
            raise(ErrorKind::ZeroRange,
                  "column " + features.names()[c] + " is constant on the train span");
        }
        norm.mins[c] = lo;
        norm.maxs[c] = hi;
    }
    return {apply_norm(features, norm), std::move(norm)};
}

FeatureMatrix apply_norm(const FeatureMatrix& features, const NormParams& norm) {
    if (norm.names != features.names()) {
        raise(ErrorKind::FeatureCountMismatch, "normalization params built for other columns");
    }
    std::vector<double> data(features.rows() * features.cols());
    for (std::size_t r = 0; r < features.rows(); ++r) {
        for (std::size_t c = 0; c < features.cols(); ++c) {
            data[r * features.cols() + c] = norm.transform_value(c, features.at(r, c));
        }
    }
    return FeatureMatrix(features.names(), features.rows(), std::move(data));
}

std::pair<OhlcvFrame, OhlcvFrame> split_train_test(const OhlcvFrame& frame,
                                                   std::size_t first_test_row) {
    if (first_test_row == 0 || first_test_row >= frame.size()) {
        raise(ErrorKind::SplitOutOfRange, "split must fall strictly inside the frame");
    }
    return {frame.slice(0, first_test_row),
            frame.slice(first_test_row, frame.size() - first_test_row)};
}

std::size_t resolve_split(const PipelineConfig& cfg, const OhlcvFrame& frame) {
    std::size_t s = 0;
    if (cfg.split_index) {
        s = *cfg.split_index;
    } else if (cfg.split_date) {
        const Date d = Date::from_yyyymmdd(*cfg.split_date);
        std::size_t i = 0;
        while (i < frame.size() && frame[i].date < d) ++i;
        s = i;
    } else {
        raise(ErrorKind::BadParams, "config needs split_date or split_index");
    }
    if (s == 0 || s >= frame.size()) {
        raise(ErrorKind::SplitOutOfRange, "split outside the data range");
    }
    return s;
}

Metrics evaluate(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size() || pred.size() < 2) {
        raise(ErrorKind::LengthMismatch, "evaluate needs equal lengths >= 2");
    }
    const std::size_t n = pred.size();
    double mae = 0, sse = 0, mape = 0, ybar = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (truth[i] == 0) raise(ErrorKind::ZeroTruthValue, "MAPE undefined at zero truth");
        const double d = pred[i] - truth[i];
        mae += std::abs(d);
        sse += d * d;
        mape += std::abs(d / truth[i]);
        ybar += truth[i];
    }
    ybar /= static_cast<double>(n);
    double ss_tot = 0, ss_pred = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ss_tot += (truth[i] - ybar) * (truth[i] - ybar);
        ss_pred += (pred[i] - ybar) * (pred[i] - ybar);
    }
    if (ss_tot <= 0) raise(ErrorKind::ZeroVariance, "constant truth has no R^2");
    Metrics m;
    m.mae = mae / static_cast<double>(n);
    m.rmse = std::sqrt(sse / static_cast<double>(n));
    m.mape = mape / static_cast<double>(n);
    m.r2_standard = 1.0 - sse / ss_tot;
    m.r2_paper = ss_pred / ss_tot;
    return m;
}

FeatureMatrix flatten_windows(const WindowedDataset& ds) {
    if (ds.size() == 0) raise(ErrorKind::EmptyDataset, "no windows");
    const std::size_t width = ds.lookback * ds.feature_count;
    std::vector<double> data;
    data.reserve(ds.size() * width);
    for (const auto& w : ds.inputs) data.insert(data.end(), w.begin(), w.end());
    return FeatureMatrix(indexed_names("w", width), ds.size(), std::move(data));
}

FeatureMatrix finetune_features(const PipelineConfig& cfg, const WindowedDataset& ds,
                                const std::vector<nn::EvalOutput>& eval_outputs) {
    if (ds.size() != eval_outputs.size()) {
        raise(ErrorKind::LengthMismatch, "eval outputs do not match windows");
    }
    if (ds.size() == 0) raise(ErrorKind::EmptyDataset, "no windows");

    if (cfg.finetune_input == FinetuneInput::decoder_features) {
        const std::size_t width = eval_outputs[0].features.size();
        std::vector<double> data;
        data.reserve(ds.size() * width);
        for (const auto& eo : eval_outputs) {
            data.insert(data.end(), eo.features.begin(), eo.features.end());
        }
        return FeatureMatrix(indexed_names("f", width), ds.size(), std::move(data));
    }

    // [prediction, last window row, per-column window means]
    const std::size_t f = ds.feature_count;
    const std::size_t width = 1 + 2 * f;
    std::vector<double> data;
    data.reserve(ds.size() * width);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        data.push_back(eval_outputs[i].prediction);
        const auto& w = ds.inputs[i];
        const double* last = w.data() + (ds.lookback - 1) * f;
        data.insert(data.end(), last, last + f);
        for (std::size_t c = 0; c < f; ++c) {
            double s = 0;
            for (std::size_t r = 0; r < ds.lookback; ++r) s += w[r * f + c];
            data.push_back(s / static_cast<double>(ds.lookback));
        }
    }
    return FeatureMatrix(indexed_names("s", width), ds.size(), std::move(data));
}

TrainedVariant run_variant_full(const PipelineConfig& cfg, const OhlcvFrame& frame,
                                Variant variant, std::uint64_t seed) {
    TrainedVariant out;
    const std::size_t split = stage("split", [&] { return resolve_split(cfg, frame); });
    const std::size_t n = frame.size();
    const Series close = frame.close_series();

    out.arima_model = stage("arima_fit", [&] {
        const Series train_close = frame.slice(0, split).close_series();
        return arima::fit(train_close, cfg.arima);
    });

    const FeatureMatrix features =
        stage("features", [&] { return build_features(frame, out.arima_model); });

    if (variant == Variant::arima_only) {
        // Rolling one-step forecasts with fixed train-span coefficients.
        VariantResult& r = out.result;
        for (std::size_t t = split; t < n; ++t) {
            std::vector<double> history(close.values().begin(),
                                        close.values().begin() + t);
            const Series fc = arima::forecast(out.arima_model, Series(std::move(history)), 1);
            r.prediction.push_back(fc[0]);
            r.truth.push_back(close[t]);
            r.dates.push_back(frame[t].date);
        }
        r.metrics = stage("evaluate", [&] { return evaluate(r.prediction, r.truth); });
        return out;
    }

    auto [norm_feats, norm] = stage("normalize", [&] { return normalize(features, split); });
    out.norm = norm;

    const std::size_t close_col = features.col_index("close");
    const std::size_t resid_col = features.col_index("arima_residual");
    const std::size_t target_col_idx = cfg.predict_residual ? resid_col : close_col;
    const std::vector<double> target_col = norm_feats.column(target_col_idx);

    const std::size_t lookback = cfg.model.lookback;
    if (split <= lookback) {
        raise(ErrorKind::SplitOutOfRange, "train span shorter than the lookback window");
    }
    const WindowedDataset all =
        stage("windows", [&] { return make_windows(norm_feats, target_col, lookback); });
    const std::size_t n_train = split - lookback;  // windows with target row < split
    const std::size_t n_test = all.size() - n_train;
    if (n_test == 0) raise(ErrorKind::SplitOutOfRange, "no test windows after split");
    const WindowedDataset train_ds = all.subset(0, n_train);
    const WindowedDataset test_ds = all.subset(n_train, n_test);

    std::vector<double> pred_norm;
    VariantResult& r = out.result;

    if (variant == Variant::xgb_only) {
        const FeatureMatrix xt = flatten_windows(train_ds);
        const FeatureMatrix xs = flatten_windows(test_ds);
        out.ensemble = stage("gbt_fit", [&] { return gbt::fit(xt, train_ds.targets, cfg.gbt); });
        pred_norm = gbt::predict(*out.ensemble, xs);
    } else {
        const nn::ModelConfig mc = variant_model_config(cfg, variant);
        nn::Seq2SeqModel model = nn::Seq2SeqModel::init(mc, seed);
        nn::TrainConfig tc = cfg.train;
        tc.seed = seed;
        const nn::TrainResult tr =
            stage("pretrain", [&] { return nn::train(model, train_ds, tc); });
        r.loss_history = tr.loss_history;

        if (variant_uses_gbt(variant)) {
            const auto eo_train = nn::predict_dataset(model, train_ds);
            const auto eo_test = nn::predict_dataset(model, test_ds);
            const FeatureMatrix ft = finetune_features(cfg, train_ds, eo_train);
            const FeatureMatrix fs = finetune_features(cfg, test_ds, eo_test);
            out.ensemble =
                stage("gbt_fit", [&] { return gbt::fit(ft, train_ds.targets, cfg.gbt); });
            pred_norm = gbt::predict(*out.ensemble, fs);
        } else {
            const auto eo_test = nn::predict_dataset(model, test_ds);
            pred_norm.reserve(eo_test.size());
            for (const auto& eo : eo_test) pred_norm.push_back(eo.prediction);
        }
        out.model = std::move(model);
    }

    // De-normalize to the price scale.
    const std::vector<double> fitted_col = features.column(features.col_index("arima_fitted"));
    for (std::size_t i = 0; i < test_ds.size(); ++i) {
        const std::size_t t = test_ds.target_rows[i];
        double price;
        if (cfg.predict_residual) {
            price = fitted_col[t] + norm.inverse_value(resid_col, pred_norm[i]);
        } else {
            price = norm.inverse_value(close_col, pred_norm[i]);
        }
        r.prediction.push_back(price);
        r.truth.push_back(close[t]);
        r.dates.push_back(frame[t].date);
    }
    r.metrics = stage("evaluate", [&] { return evaluate(r.prediction, r.truth); });
    return out;
}

RunReport run(const PipelineConfig& cfg, const OhlcvFrame& frame,
              const std::string& fingerprint) {
    RunReport report;
    report.fingerprint = fingerprint;
    report.config = cfg;
    report.started_at = now_rfc3339();
    TrainedVariant tv = run_variant_full(cfg, frame, cfg.variant, cfg.seed);
    report.variants.emplace(to_string(cfg.variant), std::move(tv.result));
    report.finished_at = now_rfc3339();
    return report;
}

RunReport run_ablation(const PipelineConfig& cfg, const OhlcvFrame& frame,
                       const std::string& fingerprint) {
    RunReport report;
    report.fingerprint = fingerprint;
    report.config = cfg;
    report.started_at = now_rfc3339();
    for (std::size_t i = 0; i < kAllVariants.size(); ++i) {
        const Variant v = kAllVariants[i];
        TrainedVariant tv = run_variant_full(cfg, frame, v, cfg.seed + i);
        report.variants.emplace(to_string(v), std::move(tv.result));
    }
    report.finished_at = now_rfc3339();
    return report;
}

}  // namespace stockcast::pipeline

#include "stockcast/checkpoint.hpp"

#include <fstream>
#include <json.hpp>

#include "stockcast/errors.hpp"
#include "stockcast/kvconfig.hpp"

namespace stockcast::checkpoint {

namespace {

using nlohmann::json;

constexpr const char* kMagic = "stockcast.checkpoint";

json model_config_to_json(const nn::ModelConfig& m) {
    return json{{"lookback", m.lookback},
                {"features", m.features},
                {"d_model", m.d_model},
                {"heads", m.heads},
                {"layers", m.layers},
                {"hidden", m.hidden},
                {"use_attention", m.use_attention},
                {"use_conv", m.use_conv},
                {"bidirectional", m.bidirectional},
                {"multi_scale_conv", m.multi_scale_conv},
                {"causal_mask", m.causal_mask},
                {"dropout", m.dropout}};
}

nn::ModelConfig model_config_from_json(const json& j) {
    nn::ModelConfig m;
    m.lookback = j.at("lookback").get<std::size_t>();
    m.features = j.at("features").get<std::size_t>();
    m.d_model = j.at("d_model").get<std::size_t>();
    m.heads = j.at("heads").get<std::size_t>();
    m.layers = j.at("layers").get<std::size_t>();
    m.hidden = j.at("hidden").get<std::size_t>();
    m.use_attention = j.at("use_attention").get<bool>();
    m.use_conv = j.at("use_conv").get<bool>();
    m.bidirectional = j.at("bidirectional").get<bool>();
    m.multi_scale_conv = j.at("multi_scale_conv").get<bool>();
    m.causal_mask = j.at("causal_mask").get<bool>();
    m.dropout = j.at("dropout").get<double>();
    return m;
}

json gbt_to_json(const gbt::GbtEnsemble& e) {
    json trees = json::array();
    for (const auto& tree : e.trees) {
        json t;
        std::vector<int> feature, left, right;
        std::vector<double> threshold, weight;
        for (const auto& n : tree.nodes) {
            feature.push_back(n.feature);
            threshold.push_back(n.threshold);
            left.push_back(n.left);
            right.push_back(n.right);
            weight.push_back(n.weight);
        }
        t["feature"] = feature;
        t["threshold"] = threshold;
        t["left"] = left;
        t["right"] = right;
        t["weight"] = weight;
        trees.push_back(std::move(t));
    }
    return json{{"base_score", e.base_score},
                {"n_features", e.n_features},
                {"n_rounds", e.params.n_rounds},
                {"max_depth", e.params.max_depth},
                {"learning_rate", e.params.learning_rate},
                {"l2_reg", e.params.l2_reg},
                {"min_split_gain", e.params.min_split_gain},
                {"min_child_weight", e.params.min_child_weight},
                {"trees", std::move(trees)}};
}

gbt::GbtEnsemble gbt_from_json(const json& j) {
    gbt::GbtEnsemble e;
    e.base_score = j.at("base_score").get<double>();
    e.n_features = j.at("n_features").get<std::size_t>();
    e.params.n_rounds = j.at("n_rounds").get<std::size_t>();
    e.params.max_depth = j.at("max_depth").get<std::size_t>();
    e.params.learning_rate = j.at("learning_rate").get<double>();
    e.params.l2_reg = j.at("l2_reg").get<double>();
    e.params.min_split_gain = j.at("min_split_gain").get<double>();
    e.params.min_child_weight = j.at("min_child_weight").get<double>();
    for (const auto& t : j.at("trees")) {
        gbt::RegressionTree tree;
        const auto& feature = t.at("feature");
        const auto& threshold = t.at("threshold");
        const auto& left = t.at("left");
        const auto& right = t.at("right");
        const auto& weight = t.at("weight");
        for (std::size_t i = 0; i < feature.size(); ++i) {
            gbt::TreeNode n;
            n.feature = feature[i].get<int>();
            n.threshold = threshold[i].get<double>();
            n.left = left[i].get<int>();
            n.right = right[i].get<int>();
            n.weight = weight[i].get<double>();
            tree.nodes.push_back(n);
        }
        e.trees.push_back(std::move(tree));
    }
    return e;
}

}  // namespace

Checkpoint from_trained(const pipeline::PipelineConfig& cfg,
                        const pipeline::TrainedVariant& trained) {
    Checkpoint ck;
    ck.config = cfg;
    ck.effective_model = trained.model ? trained.model->config()
                                       : pipeline::variant_model_config(cfg, cfg.variant);
    ck.arima_model = trained.arima_model;
    ck.norm = trained.norm;
    ck.model = trained.model;
    ck.ensemble = trained.ensemble;
    return ck;
}

void save(const Checkpoint& ck, const std::string& path) {
    json j;
    j["format"] = kMagic;
    j["version"] = ck.version;
    j["config"] = config_to_kv(ck.config);
    j["model_config"] = model_config_to_json(ck.effective_model);

    j["arima"] = json{{"p", ck.arima_model.spec.p},
                      {"d", ck.arima_model.spec.d},
                      {"q", ck.arima_model.spec.q},
                      {"intercept", ck.arima_model.intercept},
                      {"coefficients", ck.arima_model.coefficients},
                      {"residual_variance", ck.arima_model.residual_variance},
                      {"anchor", ck.arima_model.training_anchor}};
    j["norm"] = json{
        {"names", ck.norm.names}, {"mins", ck.norm.mins}, {"maxs", ck.norm.maxs}};

    if (ck.model) {
        json params = json::object();
        for (const auto& [name, tensor] : ck.model->params()) {
            params[name] = json{{"shape", tensor.shape()}, {"data", tensor.vec()}};
        }
        j["params"] = std::move(params);
    }
    if (ck.ensemble) j["gbt"] = gbt_to_json(*ck.ensemble);

    const std::vector<std::uint8_t> cbor = json::to_cbor(j);
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorKind::ParseError, "cannot write " + path);
    out.write(reinterpret_cast<const char*>(cbor.data()),
              static_cast<std::streamsize>(cbor.size()));
}

Checkpoint load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::ParseError, "cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    json j;
    try {
        j = json::from_cbor(bytes);
    } catch (const std::exception& e) {
        raise(ErrorKind::CheckpointFormat, std::string("not a checkpoint: ") + e.what());
    }
    if (!j.contains("format") || j["format"] != kMagic) {
        raise(ErrorKind::CheckpointFormat, "missing checkpoint magic");
    }
    Checkpoint ck;
    ck.version = j.at("version").get<std::uint32_t>();
    if (ck.version != 1) {
        raise(ErrorKind::CheckpointFormat,
              "unsupported version " + std::to_string(ck.version));
    }
    apply_kv(ck.config, j.at("config").get<KvMap>());
    ck.effective_model = model_config_from_json(j.at("model_config"));

    const json& a = j.at("arima");
    ck.arima_model.spec.p = a.at("p").get<int>();
    ck.arima_model.spec.d = a.at("d").get<int>();
    ck.arima_model.spec.q = a.at("q").get<int>();
    ck.arima_model.intercept = a.at("intercept").get<double>();
    ck.arima_model.coefficients = a.at("coefficients").get<std::vector<double>>();
    ck.arima_model.residual_variance = a.at("residual_variance").get<double>();
    ck.arima_model.training_anchor = a.at("anchor").get<std::vector<double>>();

    const json& nrm = j.at("norm");
    ck.norm.names = nrm.at("names").get<std::vector<std::string>>();
    ck.norm.mins = nrm.at("mins").get<std::vector<double>>();
    ck.norm.maxs = nrm.at("maxs").get<std::vector<double>>();

    if (j.contains("params")) {
        std::map<std::string, ad::Tensor> params;
        for (const auto& [name, pj] : j.at("params").items()) {
            params.emplace(name,
                           ad::Tensor(pj.at("shape").get<std::vector<std::size_t>>(),
                                      pj.at("data").get<std::vector<double>>()));
        }
        ck.model = nn::Seq2SeqModel(ck.effective_model, std::move(params));
    }
    if (j.contains("gbt")) ck.ensemble = gbt_from_json(j.at("gbt"));
    return ck;
}

FramePrediction predict_frame(const Checkpoint& ck, const OhlcvFrame& frame) {
    FramePrediction out;
    const Series close = frame.close_series();
    const pipeline::Variant variant = ck.config.variant;

    if (variant == pipeline::Variant::arima_only) {
        const std::size_t warmup = static_cast<std::size_t>(
            ck.arima_model.spec.p + ck.arima_model.spec.d);
        for (std::size_t t = std::max<std::size_t>(warmup, 1); t < frame.size(); ++t) {
            std::vector<double> history(close.values().begin(),
                                        close.values().begin() + t);
            const Series fc = arima::forecast(ck.arima_model, Series(std::move(history)), 1);
            out.prediction.push_back(fc[0]);
            out.truth.push_back(close[t]);
            out.dates.push_back(frame[t].date);
        }
        return out;
    }

    const FeatureMatrix features = pipeline::build_features(frame, ck.arima_model);
    const FeatureMatrix norm_feats = pipeline::apply_norm(features, ck.norm);
    const std::size_t close_col = features.col_index("close");
    const std::size_t resid_col = features.col_index("arima_residual");
    const std::size_t target_col_idx = ck.config.predict_residual ? resid_col : close_col;
    const std::vector<double> target_col = norm_feats.column(target_col_idx);
    const WindowedDataset ds =
        make_windows(norm_feats, target_col, ck.effective_model.lookback);

    std::vector<double> pred_norm;
    if (variant == pipeline::Variant::xgb_only) {
        pred_norm = gbt::predict(*ck.ensemble, pipeline::flatten_windows(ds));
    } else if (pipeline::variant_uses_gbt(variant)) {
        const auto eo = nn::predict_dataset(*ck.model, ds);
        pred_norm = gbt::predict(*ck.ensemble,
                                 pipeline::finetune_features(ck.config, ds, eo));
    } else {
        const auto eo = nn::predict_dataset(*ck.model, ds);
        pred_norm.reserve(eo.size());
        for (const auto& e : eo) pred_norm.push_back(e.prediction);
    }

    const std::vector<double> fitted_col =
        features.column(features.col_index("arima_fitted"));
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const std::size_t t = ds.target_rows[i];
        double price;
        if (ck.config.predict_residual) {
            price = fitted_col[t] + ck.norm.inverse_value(resid_col, pred_norm[i]);
        } else {
            price = ck.norm.inverse_value(close_col, pred_norm[i]);
        }
        out.prediction.push_back(price);
        out.truth.push_back(close[t]);
        out.dates.push_back(frame[t].date);
    }
    return out;
}

}  // namespace stockcast::checkpoint

#include "stockcast/kvconfig.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "stockcast/errors.hpp"

namespace stockcast {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const unsigned long long r = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return r;
    } catch (const std::exception&) {
        raise(ErrorKind::BadParams, "bad integer for " + key + ": '" + v + "'");
    }
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return r;
    } catch (const std::exception&) {
        raise(ErrorKind::BadParams, "bad number for " + key + ": '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "on") return true;
    if (v == "0" || v == "false" || v == "off") return false;
    raise(ErrorKind::BadParams, "bad boolean for " + key + ": '" + v + "'");
}

}  // namespace

KvMap parse_kv_text(const std::string& text) {
    KvMap kv;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            raise(ErrorKind::ParseError,
                  "line " + std::to_string(line_no) + ": expected key=value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            raise(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": empty key");
        }
        kv[key] = value;
    }
    return kv;
}

KvMap parse_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorKind::ParseError, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_kv_text(ss.str());
}

void apply_kv(pipeline::PipelineConfig& cfg, const KvMap& kv) {
    for (const auto& [key, v] : kv) {
        if (key == "arima.p") cfg.arima.p = static_cast<int>(parse_u64(key, v));
        else if (key == "arima.d") cfg.arima.d = static_cast<int>(parse_u64(key, v));
        else if (key == "arima.q") cfg.arima.q = static_cast<int>(parse_u64(key, v));
        else if (key == "model.lookback") cfg.model.lookback = parse_u64(key, v);
        else if (key == "model.d_model") cfg.model.d_model = parse_u64(key, v);
        else if (key == "model.heads") cfg.model.heads = parse_u64(key, v);
        else if (key == "model.layers") cfg.model.layers = parse_u64(key, v);
        else if (key == "model.hidden") cfg.model.hidden = parse_u64(key, v);
        else if (key == "model.dropout") cfg.model.dropout = parse_double(key, v);
        else if (key == "model.multi_scale_conv") cfg.model.multi_scale_conv = parse_bool(key, v);
        else if (key == "model.causal_mask") cfg.model.causal_mask = parse_bool(key, v);
        else if (key == "train.epochs") cfg.train.epochs = parse_u64(key, v);
        else if (key == "train.batch_size") cfg.train.batch_size = parse_u64(key, v);
        else if (key == "train.learning_rate") cfg.train.learning_rate = parse_double(key, v);
        else if (key == "train.grad_clip_norm") cfg.train.grad_clip_norm = parse_double(key, v);
        else if (key == "gbt.rounds") cfg.gbt.n_rounds = parse_u64(key, v);
        else if (key == "gbt.max_depth") cfg.gbt.max_depth = parse_u64(key, v);
        else if (key == "gbt.learning_rate") cfg.gbt.learning_rate = parse_double(key, v);
        else if (key == "gbt.l2_reg") cfg.gbt.l2_reg = parse_double(key, v);
        else if (key == "gbt.min_split_gain") cfg.gbt.min_split_gain = parse_double(key, v);
        else if (key == "gbt.min_child_weight") cfg.gbt.min_child_weight = parse_double(key, v);
        else if (key == "variant") cfg.variant = pipeline::variant_from_string(v);
        else if (key == "split.date") cfg.split_date = static_cast<int>(parse_u64(key, v));
        else if (key == "split.index") cfg.split_index = parse_u64(key, v);
        else if (key == "finetune_input") {
            if (v == "decoder_features") cfg.finetune_input = pipeline::FinetuneInput::decoder_features;
            else if (v == "pred_plus_summary") cfg.finetune_input = pipeline::FinetuneInput::pred_plus_summary;
            else raise(ErrorKind::BadParams, "bad finetune_input: " + v);
        }
        else if (key == "predict_residual") cfg.predict_residual = parse_bool(key, v);
        else if (key == "seed") cfg.seed = parse_u64(key, v);
        else raise(ErrorKind::BadParams, "unknown config key: " + key);
    }
    if (cfg.seed != cfg.train.seed) cfg.train.seed = cfg.seed;
}

KvMap config_to_kv(const pipeline::PipelineConfig& cfg) {
    KvMap kv;
    kv["arima.p"] = std::to_string(cfg.arima.p);
    kv["arima.d"] = std::to_string(cfg.arima.d);
    kv["arima.q"] = std::to_string(cfg.arima.q);
    kv["model.lookback"] = std::to_string(cfg.model.lookback);
    kv["model.d_model"] = std::to_string(cfg.model.d_model);
    kv["model.heads"] = std::to_string(cfg.model.heads);
    kv["model.layers"] = std::to_string(cfg.model.layers);
    kv["model.hidden"] = std::to_string(cfg.model.hidden);
    kv["model.dropout"] = fmt_double(cfg.model.dropout);
    kv["model.multi_scale_conv"] = cfg.model.multi_scale_conv ? "1" : "0";
    kv["model.causal_mask"] = cfg.model.causal_mask ? "1" : "0";
    kv["train.epochs"] = std::to_string(cfg.train.epochs);
    kv["train.batch_size"] = std::to_string(cfg.train.batch_size);
    kv["train.learning_rate"] = fmt_double(cfg.train.learning_rate);
    kv["train.grad_clip_norm"] = fmt_double(cfg.train.grad_clip_norm);
    kv["gbt.rounds"] = std::to_string(cfg.gbt.n_rounds);
    kv["gbt.max_depth"] = std::to_string(cfg.gbt.max_depth);
    kv["gbt.learning_rate"] = fmt_double(cfg.gbt.learning_rate);
    kv["gbt.l2_reg"] = fmt_double(cfg.gbt.l2_reg);
    kv["gbt.min_split_gain"] = fmt_double(cfg.gbt.min_split_gain);
    kv["gbt.min_child_weight"] = fmt_double(cfg.gbt.min_child_weight);
    kv["variant"] = pipeline::to_string(cfg.variant);
    if (cfg.split_date) kv["split.date"] = std::to_string(*cfg.split_date);
    if (cfg.split_index) kv["split.index"] = std::to_string(*cfg.split_index);
    kv["finetune_input"] = cfg.finetune_input == pipeline::FinetuneInput::decoder_features
                               ? "decoder_features"
                               : "pred_plus_summary";
    kv["predict_residual"] = cfg.predict_residual ? "1" : "0";
    kv["seed"] = std::to_string(cfg.seed);
    return kv;
}

std::string report_to_text(const pipeline::RunReport& report, bool include_timestamps) {
    std::ostringstream out;
    char buf[64];
    out << "[run]\n";
    out << "fingerprint=" << report.fingerprint << "\n";
    if (include_timestamps) {
        out << "started_at=" << report.started_at << "\n";
        out << "finished_at=" << report.finished_at << "\n";
    }
    for (const auto& [k, v] : config_to_kv(report.config)) {
        out << "config." << k << "=" << v << "\n";
    }
    for (const auto& [name, r] : report.variants) {
        out << "[metrics." << name << "]\n";
        const auto put = [&](const char* key, double v) {
            std::snprintf(buf, sizeof(buf), "%.6f", v);
            out << key << "=" << buf << "\n";
        };
        put("mae", r.metrics.mae);
        put("rmse", r.metrics.rmse);
        put("mape", r.metrics.mape);
        put("r2", r.metrics.r2_standard);
        put("r2_paper", r.metrics.r2_paper);
        out << "n_test=" << r.truth.size() << "\n";
        if (!r.loss_history.empty()) {
            std::snprintf(buf, sizeof(buf), "%.8f", r.loss_history.back());
            out << "final_train_loss=" << buf << "\n";
        }
    }
    return out.str();
}

}  // namespace stockcast

// Command-line front end: every pipeline stage individually plus the full
// train/predict/ablate workflows. Tabular output is CSV on stdout; anything
// wall-clock goes to stderr so seeded runs stay byte-reproducible.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "stockcast/checkpoint.hpp"
#include "stockcast/errors.hpp"
#include "stockcast/io.hpp"
#include "stockcast/kvconfig.hpp"
#include "stockcast/pipeline.hpp"
#include "stockcast/stats.hpp"

namespace sc = stockcast;

namespace {

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

std::vector<double> column_with_diff(const sc::OhlcvFrame& frame, const std::string& column,
                                     std::size_t diff) {
    const sc::Series s = frame.column(column);
    if (diff == 0) return s.values();
    return sc::stats::difference(s.span(), diff);
}

void write_lag_csv(const std::vector<double>& values, std::ostream& out) {
    out << "lag,value\n";
    for (std::size_t k = 0; k < values.size(); ++k) {
        out << k << "," << fmt("%.6f", values[k]) << "\n";
    }
}

std::ostream& open_out(std::ofstream& file, const std::string& path) {
    if (path.empty()) return std::cout;
    file.open(path);
    if (!file) sc::raise(sc::ErrorKind::ParseError, "cannot write " + path);
    return file;
}

// Numeric column from a CSV or plain list of numbers. With a header row the
// preferred names win, then the last column; without one, a single column of
// numbers is assumed.
std::vector<double> read_value_column(const std::string& path,
                                      const std::vector<std::string>& preferred) {
    std::ifstream in(path);
    if (!in) sc::raise(sc::ErrorKind::ParseError, "cannot open " + path);
    std::vector<double> out;
    std::string line;
    std::size_t col = SIZE_MAX;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string cur;
        for (char ch : line) {
            if (ch == ',') {
                fields.push_back(cur);
                cur.clear();
            } else {
                cur += ch;
            }
        }
        fields.push_back(cur);
        if (line_no == 1) {
            bool numeric = true;
            try {
                std::size_t pos = 0;
                std::stod(fields[0], &pos);
                numeric = pos == fields[0].size();
            } catch (const std::exception&) {
                numeric = false;
            }
            if (!numeric) {  // header row: resolve the column and move on
                for (const auto& name : preferred) {
                    for (std::size_t i = 0; i < fields.size(); ++i) {
                        if (fields[i] == name) {
                            col = i;
                            break;
                        }
                    }
                    if (col != SIZE_MAX) break;
                }
                if (col == SIZE_MAX) col = fields.size() - 1;
                continue;
            }
            col = fields.size() - 1;
        }
        const std::size_t use = col == SIZE_MAX ? fields.size() - 1 : col;
        if (use >= fields.size()) {
            sc::raise(sc::ErrorKind::ParseError,
                      "line " + std::to_string(line_no) + ": too few fields");
        }
        try {
            out.push_back(std::stod(fields[use]));
        } catch (const std::exception&) {
            sc::raise(sc::ErrorKind::ParseError, "line " + std::to_string(line_no) +
                                                     ": cannot parse '" + fields[use] + "'");
        }
    }
    if (out.empty()) sc::raise(sc::ErrorKind::EmptyInput, "no values in " + path);
    return out;
}

void write_prediction_csv(const std::vector<sc::Date>& dates,
                          const std::vector<double>& truth,
                          const std::vector<double>& pred, std::ostream& out) {
    out << "date,truth,prediction\n";
    for (std::size_t i = 0; i < pred.size(); ++i) {
        out << dates[i].to_string() << "," << fmt("%.17g", truth[i]) << ","
            << fmt("%.17g", pred[i]) << "\n";
    }
}

void print_metrics(const sc::pipeline::Metrics& m, std::ostream& out) {
    out << "mae=" << fmt("%.6g", m.mae) << "\n";
    out << "rmse=" << fmt("%.6g", m.rmse) << "\n";
    out << "mape=" << fmt("%.6g", m.mape) << "\n";
    out << "r2=" << fmt("%.6g", m.r2_standard) << "\n";
    out << "r2_paper=" << fmt("%.6g", m.r2_paper) << "\n";
}

struct SplitFlags {
    std::optional<int> date;
    std::optional<std::size_t> index;
    double fraction = 0.9;
};

void add_split_flags(CLI::App* cmd, SplitFlags& flags) {
    cmd->add_option("--split-date", flags.date, "First test row at/after this date (YYYYMMDD)");
    cmd->add_option("--split-index", flags.index, "First test row index");
    cmd->add_option("--split-frac", flags.fraction,
                    "Train fraction when no date/index given (default 0.9)");
}

void resolve_split_flags(sc::pipeline::PipelineConfig& cfg, const SplitFlags& flags,
                         std::size_t n_rows) {
    if (flags.date) {
        cfg.split_date = flags.date;
        cfg.split_index.reset();
    } else if (flags.index) {
        cfg.split_index = flags.index;
        cfg.split_date.reset();
    } else if (!cfg.split_date && !cfg.split_index) {
        cfg.split_index = static_cast<std::size_t>(
            static_cast<double>(n_rows) * flags.fraction);
    }
}

void apply_config_file(sc::pipeline::PipelineConfig& cfg, const std::string& path) {
    if (!path.empty()) sc::apply_kv(cfg, sc::parse_kv_file(path));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hybrid stock price forecasting toolkit"};
    app.require_subcommand(1);

    // ---- adf ----
    auto* adf = app.add_subcommand("adf", "Augmented Dickey-Fuller unit-root test");
    std::string adf_csv, adf_column = "close";
    std::size_t adf_diff = 0;
    std::optional<std::size_t> adf_maxlag;
    adf->add_option("csv", adf_csv, "OHLCV CSV file")->required();
    adf->add_option("--column", adf_column, "Column to test (default close)");
    adf->add_option("--diff", adf_diff, "Difference the series this many times first");
    adf->add_option("--max-lag", adf_maxlag, "Maximum lag for AIC selection");

    // ---- acf / pacf ----
    auto* acf_cmd = app.add_subcommand("acf", "Sample autocorrelation function");
    auto* pacf_cmd = app.add_subcommand("pacf", "Partial autocorrelation function");
    struct CorrFlags {
        std::string csv, column = "close", out;
        std::size_t lags = 40, diff = 0;
    } acf_flags, pacf_flags;
    for (auto [cmd, flags] : {std::pair{acf_cmd, &acf_flags}, std::pair{pacf_cmd, &pacf_flags}}) {
        cmd->add_option("csv", flags->csv, "OHLCV CSV file")->required();
        cmd->add_option("--lags", flags->lags, "Number of lags")->required();
        cmd->add_option("--column", flags->column, "Column (default close)");
        cmd->add_option("--diff", flags->diff, "Difference the series first");
        cmd->add_option("--out", flags->out, "Write CSV here instead of stdout");
    }

    // ---- arima ----
    auto* arima_cmd = app.add_subcommand("arima", "AR model fitting and forecasting");
    arima_cmd->require_subcommand(1);
    auto* arima_fit = arima_cmd->add_subcommand("fit", "Fit and print coefficients");
    auto* arima_fc = arima_cmd->add_subcommand("forecast", "Forecast from the series end");
    struct ArimaFlags {
        std::string csv, out;
        int p = 2, d = 1;
        std::size_t horizon = 1;
    } af, aff;
    for (auto [cmd, flags] : {std::pair{arima_fit, &af}, std::pair{arima_fc, &aff}}) {
        cmd->add_option("csv", flags->csv, "OHLCV CSV file")->required();
        cmd->add_option("--p", flags->p, "AR order (default 2)");
        cmd->add_option("--d", flags->d, "Differencing order (default 1)");
        cmd->add_option("--out", flags->out, "Output CSV path");
    }
    arima_fc->add_option("--horizon", aff.horizon, "Steps ahead (default 1)");

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "Pretrain + fine-tune one variant");
    std::string train_csv, train_variant = "acnn_bilstm_xgb", train_config,
                train_out = "model.ckpt", train_loss_out, train_pred_out;
    std::optional<std::uint64_t> train_seed;
    SplitFlags train_split;
    train_cmd->add_option("csv", train_csv, "OHLCV CSV file")->required();
    train_cmd->add_option("--variant", train_variant, "Model variant");
    train_cmd->add_option("--seed", train_seed, "Random seed");
    train_cmd->add_option("--config", train_config, "key=value config file");
    train_cmd->add_option("--out", train_out, "Checkpoint path (default model.ckpt)");
    train_cmd->add_option("--loss-out", train_loss_out, "Write per-epoch loss CSV");
    train_cmd->add_option("--pred-out", train_pred_out, "Write test-span prediction CSV");
    add_split_flags(train_cmd, train_split);

    // ---- predict ----
    auto* predict_cmd = app.add_subcommand("predict", "Apply a checkpoint to a CSV");
    std::string predict_ck, predict_csv, predict_out;
    predict_cmd->add_option("--checkpoint", predict_ck, "Checkpoint file")->required();
    predict_cmd->add_option("csv", predict_csv, "OHLCV CSV file")->required();
    predict_cmd->add_option("--out", predict_out, "Write CSV here instead of stdout");

    // ---- evaluate ----
    auto* eval_cmd = app.add_subcommand("evaluate", "Error metrics between two series");
    std::string eval_pred, eval_truth;
    eval_cmd->add_option("--pred", eval_pred, "Prediction CSV/list")->required();
    eval_cmd->add_option("--truth", eval_truth, "Truth CSV/list")->required();

    // ---- ablate ----
    auto* ablate_cmd = app.add_subcommand("ablate", "Run all eight variants and compare");
    std::string ablate_csv, ablate_config, ablate_outdir;
    std::optional<std::uint64_t> ablate_seed;
    SplitFlags ablate_split;
    ablate_cmd->add_option("csv", ablate_csv, "OHLCV CSV file")->required();
    ablate_cmd->add_option("--seed", ablate_seed, "Base seed (variant i adds i)");
    ablate_cmd->add_option("--config", ablate_config, "key=value config file");
    ablate_cmd->add_option("--out-dir", ablate_outdir, "Write per-variant CSVs + report here");
    add_split_flags(ablate_cmd, ablate_split);

    // ---- gen ----
    auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic OHLCV fixture");
    std::string gen_kind = "random_walk", gen_out;
    std::size_t gen_n = 1000;
    std::uint64_t gen_seed = 0;
    sc::io::SyntheticParams gen_params;
    gen_cmd->add_option("--kind", gen_kind, "random_walk | ar2 | sine_plus_noise");
    gen_cmd->add_option("--n", gen_n, "Number of bars")->required();
    gen_cmd->add_option("--seed", gen_seed, "Random seed");
    gen_cmd->add_option("--out", gen_out, "Output CSV path")->required();
    gen_cmd->add_option("--start", gen_params.start, "Base price level");
    gen_cmd->add_option("--sigma", gen_params.sigma, "Innovation scale");
    gen_cmd->add_option("--a1", gen_params.a1, "ar2: first difference coefficient");
    gen_cmd->add_option("--a2", gen_params.a2, "ar2: second difference coefficient");
    gen_cmd->add_option("--period1", gen_params.period1, "sine: first period");
    gen_cmd->add_option("--amp1", gen_params.amp1, "sine: first amplitude");
    gen_cmd->add_option("--period2", gen_params.period2, "sine: second period");
    gen_cmd->add_option("--amp2", gen_params.amp2, "sine: second amplitude");
    gen_cmd->add_option("--ar-phi", gen_params.ar_phi, "sine: AR(1) noise coefficient");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // prints help, exit 0
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (*adf) {
            const auto frame = sc::io::load_ohlcv_csv(adf_csv);
            const auto values = column_with_diff(frame, adf_column, adf_diff);
            const auto report = sc::stats::adf_test(values, adf_maxlag);
            std::cout << "test_statistic=" << fmt("%.6g", report.test_statistic) << "\n"
                      << "p_value=" << fmt("%.6g", report.p_value) << "\n"
                      << "lags_used=" << report.lags_used << "\n"
                      << "n_obs=" << report.n_obs << "\n"
                      << "critical_1pct=" << fmt("%.6g", report.crit_1pct) << "\n"
                      << "critical_5pct=" << fmt("%.6g", report.crit_5pct) << "\n"
                      << "critical_10pct=" << fmt("%.6g", report.crit_10pct) << "\n";
        } else if (*acf_cmd || *pacf_cmd) {
            const CorrFlags& flags = *acf_cmd ? acf_flags : pacf_flags;
            const auto frame = sc::io::load_ohlcv_csv(flags.csv);
            const auto values = column_with_diff(frame, flags.column, flags.diff);
            const auto result = *acf_cmd ? sc::stats::acf(values, flags.lags)
                                         : sc::stats::pacf(values, flags.lags);
            std::ofstream file;
            write_lag_csv(result, open_out(file, flags.out));
        } else if (*arima_fit) {
            const auto frame = sc::io::load_ohlcv_csv(af.csv);
            const sc::Series close = frame.close_series();
            const auto model = sc::arima::fit(close, {af.p, af.d, 0});
            std::cout << "p=" << model.spec.p << "\n"
                      << "d=" << model.spec.d << "\n"
                      << "intercept=" << fmt("%.10g", model.intercept) << "\n";
            for (std::size_t i = 0; i < model.coefficients.size(); ++i) {
                std::cout << "a" << i + 1 << "=" << fmt("%.10g", model.coefficients[i]) << "\n";
            }
            std::cout << "residual_variance=" << fmt("%.10g", model.residual_variance) << "\n";
            if (!af.out.empty()) {
                auto [fitted, resid] = sc::arima::fitted_and_residuals(model, close);
                std::ofstream out(af.out);
                if (!out) sc::raise(sc::ErrorKind::ParseError, "cannot write " + af.out);
                out << "date,actual,fitted,residual\n";
                for (std::size_t i = 0; i < close.size(); ++i) {
                    out << close.dates()[i].to_string() << "," << fmt("%.17g", close[i]) << ","
                        << fmt("%.17g", fitted[i]) << "," << fmt("%.17g", resid[i]) << "\n";
                }
            }
        } else if (*arima_fc) {
            const auto frame = sc::io::load_ohlcv_csv(aff.csv);
            const sc::Series close = frame.close_series();
            const auto model = sc::arima::fit(close, {aff.p, aff.d, 0});
            const sc::Series fc = sc::arima::forecast(model, close, aff.horizon);
            std::ofstream file;
            std::ostream& out = open_out(file, aff.out);
            out << "step,forecast\n";
            for (std::size_t i = 0; i < fc.size(); ++i) {
                out << i + 1 << "," << fmt("%.17g", fc[i]) << "\n";
            }
        } else if (*train_cmd) {
            sc::pipeline::PipelineConfig cfg;
            apply_config_file(cfg, train_config);
            if (train_cmd->count("--variant")) {
                cfg.variant = sc::pipeline::variant_from_string(train_variant);
            }
            if (train_seed) {
                cfg.seed = *train_seed;
                cfg.train.seed = *train_seed;
            }
            const auto frame = sc::io::load_ohlcv_csv(train_csv);
            resolve_split_flags(cfg, train_split, frame.size());
            std::cerr << "train started variant=" << sc::pipeline::to_string(cfg.variant)
                      << "\n";
            const auto trained =
                sc::pipeline::run_variant_full(cfg, frame, cfg.variant, cfg.seed);
            const auto ck = sc::checkpoint::from_trained(cfg, trained);
            sc::checkpoint::save(ck, train_out);
            print_metrics(trained.result.metrics, std::cout);
            std::cout << "checkpoint=" << train_out << "\n";
            if (!train_loss_out.empty()) {
                std::ofstream out(train_loss_out);
                out << "epoch,loss\n";
                for (std::size_t e = 0; e < trained.result.loss_history.size(); ++e) {
                    out << e + 1 << "," << fmt("%.17g", trained.result.loss_history[e]) << "\n";
                }
            }
            if (!train_pred_out.empty()) {
                std::ofstream out(train_pred_out);
                write_prediction_csv(trained.result.dates, trained.result.truth,
                                     trained.result.prediction, out);
            }
        } else if (*predict_cmd) {
            const auto ck = sc::checkpoint::load(predict_ck);
            const auto frame = sc::io::load_ohlcv_csv(predict_csv);
            const auto fp = sc::checkpoint::predict_frame(ck, frame);
            std::ofstream file;
            write_prediction_csv(fp.dates, fp.truth, fp.prediction,
                                 open_out(file, predict_out));
        } else if (*eval_cmd) {
            const auto pred = read_value_column(eval_pred, {"value", "prediction"});
            const auto truth = read_value_column(eval_truth, {"value", "truth"});
            print_metrics(sc::pipeline::evaluate(pred, truth), std::cout);
        } else if (*ablate_cmd) {
            sc::pipeline::PipelineConfig cfg;
            apply_config_file(cfg, ablate_config);
            if (ablate_seed) {
                cfg.seed = *ablate_seed;
                cfg.train.seed = *ablate_seed;
            }
            const auto frame = sc::io::load_ohlcv_csv(ablate_csv);
            resolve_split_flags(cfg, ablate_split, frame.size());
            const std::string fingerprint = sc::io::file_fingerprint(ablate_csv);
            std::cerr << "ablation started\n";
            const auto report = sc::pipeline::run_ablation(cfg, frame, fingerprint);
            std::cerr << "ablation finished " << report.finished_at << "\n";
            std::cout << "variant,mae,rmse,mape,r2,r2_paper\n";
            for (const auto v : sc::pipeline::kAllVariants) {
                const auto& r = report.variants.at(sc::pipeline::to_string(v));
                std::cout << sc::pipeline::to_string(v) << ","
                          << fmt("%.6f", r.metrics.mae) << "," << fmt("%.6f", r.metrics.rmse)
                          << "," << fmt("%.6f", r.metrics.mape) << ","
                          << fmt("%.6f", r.metrics.r2_standard) << ","
                          << fmt("%.6f", r.metrics.r2_paper) << "\n";
            }
            if (!ablate_outdir.empty()) {
                std::ofstream rep(ablate_outdir + "/report.txt");
                if (!rep) {
                    sc::raise(sc::ErrorKind::ParseError, "cannot write to " + ablate_outdir);
                }
                rep << sc::report_to_text(report, true);
                for (const auto& [name, r] : report.variants) {
                    std::ofstream out(ablate_outdir + "/" + name + ".csv");
                    write_prediction_csv(r.dates, r.truth, r.prediction, out);
                }
            }
        } else if (*gen_cmd) {
            const auto kind = sc::io::synthetic_kind_from_string(gen_kind);
            const auto frame = sc::io::gen_synthetic(kind, gen_n, gen_seed, gen_params);
            sc::io::save_ohlcv_csv(frame, gen_out);
            std::cout << "rows=" << frame.size() << "\n"
                      << "out=" << gen_out << "\n";
        }
    } catch (const sc::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stockcast/arima.hpp"
#include "stockcast/dataset.hpp"
#include "stockcast/gbt.hpp"
#include "stockcast/nn.hpp"
#include "stockcast/ohlcv.hpp"

namespace stockcast::pipeline {

/// The eight model variants of the comparison grid.
enum class Variant {
    arima_only,
    xgb_only,
    sl_lstm,
    ml_lstm,
    bilstm,
    bilstm_xgb,
    cnn_bilstm_xgb,
    acnn_bilstm_xgb,
};

inline constexpr std::array<Variant, 8> kAllVariants = {
    Variant::arima_only,   Variant::xgb_only,       Variant::sl_lstm,
    Variant::ml_lstm,      Variant::bilstm,         Variant::bilstm_xgb,
    Variant::cnn_bilstm_xgb, Variant::acnn_bilstm_xgb,
};

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);  // Errors: BadParams
bool variant_uses_nn(Variant v);
bool variant_uses_gbt(Variant v);

struct PipelineConfig;

/// Architecture implied by a variant: sl_lstm is one unidirectional layer,
/// ml_lstm keeps the configured depth unidirectional, bilstm* are
/// bidirectional, cnn_* adds the conv encoder, acnn_* adds attention too.
nn::ModelConfig variant_model_config(const PipelineConfig& cfg, Variant v);

/// What the boosted-tree fine-tuner regresses on.
enum class FinetuneInput {
    decoder_features,    // the decoder feature vector per window (default)
    pred_plus_summary,   // [nn prediction, window last row, per-column window means]
};

struct PipelineConfig {
    arima::ArimaSpec arima;  // p=2, d=1, q=0
    nn::ModelConfig model;
    nn::TrainConfig train;
    gbt::GbtParams gbt;
    Variant variant = Variant::acnn_bilstm_xgb;
    std::optional<int> split_date;           // YYYYMMDD; first test row >= this date
    std::optional<std::size_t> split_index;  // explicit first test row
    FinetuneInput finetune_input = FinetuneInput::decoder_features;
    bool predict_residual = false;  // predict the residual channel, add back the AR fit
    std::uint64_t seed = 0;
};

/// Min-max column scaling fitted on the train span only. Values outside the
/// train range map outside [0,1]; the inverse transform is exact.
struct NormParams {
    std::vector<std::string> names;
    std::vector<double> mins;
    std::vector<double> maxs;

    double transform_value(std::size_t col, double v) const {
        return (v - mins[col]) / (maxs[col] - mins[col]);
    }
    double inverse_value(std::size_t col, double v) const {
        return mins[col] + v * (maxs[col] - mins[col]);
    }
};

struct Metrics {
    double mae = 0;
    double rmse = 0;
    double mape = 0;
    double r2_standard = 0;  // 1 - SS_res / SS_tot
    double r2_paper = 0;     // sum (yhat - ybar)^2 / sum (y - ybar)^2
};

struct VariantResult {
    Metrics metrics;
    std::vector<double> loss_history;  // empty for non-NN variants
    std::vector<Date> dates;           // test span
    std::vector<double> truth;
    std::vector<double> prediction;
};

struct RunReport {
    std::string fingerprint;
    PipelineConfig config;
    std::map<std::string, VariantResult> variants;
    std::string started_at;   // wall-clock; excluded from determinism contracts
    std::string finished_at;
};

/// The eight feature channels: open, high, low, close, volume, amount,
/// arima_fitted, arima_residual; fitted/residual computed causally from the
/// given model. Errors: LengthMismatch.
FeatureMatrix build_features(const OhlcvFrame& frame, const arima::ArModel& model);

/// Errors: ZeroRange(column) when a column is constant on the train span.
std::pair<FeatureMatrix, NormParams> normalize(const FeatureMatrix& features,
                                               std::size_t train_rows);

/// Applies existing normalization parameters without refitting them.
FeatureMatrix apply_norm(const FeatureMatrix& features, const NormParams& norm);

/// Contiguous order-preserving split; first_test_row rows go to train.
/// Errors: SplitOutOfRange.
std::pair<OhlcvFrame, OhlcvFrame> split_train_test(const OhlcvFrame& frame,
                                                   std::size_t first_test_row);

/// Resolves the configured split (date or index) to the first test row.
/// Errors: BadParams when neither is set, SplitOutOfRange.
std::size_t resolve_split(const PipelineConfig& cfg, const OhlcvFrame& frame);

/// MAE, RMSE, MAPE and both R^2 readings.
/// Errors: LengthMismatch (unequal or < 2), ZeroTruthValue (MAPE undefined).
Metrics evaluate(std::span<const double> pred, std::span<const double> truth);

/// Fine-tuner inputs for one dataset, per cfg.finetune_input.
FeatureMatrix finetune_features(const PipelineConfig& cfg, const WindowedDataset& ds,
                                const std::vector<nn::EvalOutput>& eval_outputs);

/// Flattened lookback*features rows, the xgb_only variant's inputs.
FeatureMatrix flatten_windows(const WindowedDataset& ds);

/// One variant's outcome plus the trained artifacts a checkpoint stores.
struct TrainedVariant {
    VariantResult result;
    arima::ArModel arima_model;
    NormParams norm;
    std::optional<nn::Seq2SeqModel> model;
    std::optional<gbt::GbtEnsemble> ensemble;
};

TrainedVariant run_variant_full(const PipelineConfig& cfg, const OhlcvFrame& frame,
                                Variant variant, std::uint64_t seed);

/// Runs the configured variant end to end and reports test-span metrics on
/// the price scale. Stage failures are rethrown with the stage name.
RunReport run(const PipelineConfig& cfg, const OhlcvFrame& frame,
              const std::string& fingerprint = "");

/// Runs all eight variants; variant i uses seed cfg.seed + i.
RunReport run_ablation(const PipelineConfig& cfg, const OhlcvFrame& frame,
                       const std::string& fingerprint = "");

}  // namespace stockcast::pipeline

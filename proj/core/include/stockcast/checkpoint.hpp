#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "stockcast/pipeline.hpp"

namespace stockcast::checkpoint {

/// Self-describing trained-run container: format version, config echo, the
/// variant-resolved architecture, named parameter tensors, ARIMA model,
/// normalization stats and the boosted-tree ensemble. Serialized as CBOR, so
/// doubles round-trip bit-exactly.
struct Checkpoint {
    std::uint32_t version = 1;
    pipeline::PipelineConfig config;
    nn::ModelConfig effective_model;  // architecture after variant overrides
    arima::ArModel arima_model;
    pipeline::NormParams norm;
    std::optional<nn::Seq2SeqModel> model;
    std::optional<gbt::GbtEnsemble> ensemble;
};

Checkpoint from_trained(const pipeline::PipelineConfig& cfg,
                        const pipeline::TrainedVariant& trained);

void save(const Checkpoint& ck, const std::string& path);

/// Errors: CheckpointFormat on wrong magic/version, ParseError on I/O.
Checkpoint load(const std::string& path);

struct FramePrediction {
    std::vector<Date> dates;
    std::vector<double> truth;
    std::vector<double> prediction;
};

/// Applies the stored artifacts to a frame, causally, producing one
/// prediction per predictable row.
FramePrediction predict_frame(const Checkpoint& ck, const OhlcvFrame& frame);

}  // namespace stockcast::checkpoint

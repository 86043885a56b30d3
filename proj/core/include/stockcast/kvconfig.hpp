#pragma once

#include <map>
#include <string>

#include "stockcast/pipeline.hpp"

namespace stockcast {

using KvMap = std::map<std::string, std::string>;

/// Flat key=value lines with dotted sections (train.epochs=50). '#' starts a
/// comment; blank lines are ignored. Errors: ParseError.
KvMap parse_kv_text(const std::string& text);
KvMap parse_kv_file(const std::string& path);

/// Applies keys onto the config. Errors: BadParams on unknown keys or bad values.
void apply_kv(pipeline::PipelineConfig& cfg, const KvMap& kv);

/// Round-trippable dump of every config knob.
KvMap config_to_kv(const pipeline::PipelineConfig& cfg);

/// Structured text report: a [run] section with the config echo, then one
/// [metrics.<variant>] section per variant.
std::string report_to_text(const pipeline::RunReport& report, bool include_timestamps);

}  // namespace stockcast

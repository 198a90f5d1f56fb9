#pragma once

// File formats: trace JSON/CSV, spectra, templates, weight vectors, volume
// and liquid databases, calibration bundles, sweep specs. All JSON carries
// the pipeline config hash of its producer.

#include <nlohmann/json_fwd.hpp>
#include <string>

#include "viliq/scene.hpp"

namespace viliq {

using json = nlohmann::json;

// FNV-1a over the canonical config serialization.
std::string config_hash(const PipelineConfig& config);

json to_json(const PipelineConfig& config);
PipelineConfig pipeline_config_from_json(const json& j);

json to_json(const VibrationTrace& trace, const PipelineConfig& config);
VibrationTrace trace_from_json(const json& j);

std::string trace_to_csv(const VibrationTrace& trace);

json to_json(const Spectrum& spectrum);
Spectrum spectrum_from_json(const json& j);

json to_json(const SspiTemplate& tmpl);
SspiTemplate sspi_from_json(const json& j);

json to_json(const VolumeWeights& weights);
VolumeWeights volume_weights_from_json(const json& j);

json to_json(const VolumeDb& db);
VolumeDb volume_db_from_json(const json& j);

json to_json(const LiquidDb& db);
LiquidDb liquid_db_from_json(const json& j);

json to_json(const ObservationModel& model);
ObservationModel observation_model_from_json(const json& j);

// Calibration bundle: fitted system + template + volume db + config hash.
struct CalibrationBundle {
    CalibratedSystem system;
    SspiTemplate sspi;
    VolumeDb volumes;
    PipelineConfig config;
    std::vector<CalibrationPoint> points;
    std::string hash;
};

json to_json(const CalibrationBundle& bundle);
CalibrationBundle calibration_bundle_from_json(const json& j);

void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);
void write_json(const std::string& path, const json& j);
json read_json(const std::string& path);

} // namespace viliq

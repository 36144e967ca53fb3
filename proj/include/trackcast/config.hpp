#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "trackcast/forecaster.hpp"
#include "trackcast/simulate.hpp"
#include "trackcast/tracker.hpp"
#include "trackcast/train.hpp"

namespace trackcast {

struct EvalConfig {
    double clear_iou_thresh = 0.5;
    bool strict_forecast = true;
    int anchor_stride = 1;
};

// Full run configuration: an empty JSON document resolves to the defaults
// (p=10, q=60, lambda=0.75, l=10, maxTime=20, thresh=0.55, max_lost=30 and
// the published optimizer schedule).
struct RunConfig {
    TrackerConfig tracker;
    ForecasterConfig forecaster;
    TrainConfig train;
    EvalConfig eval;
    std::optional<SceneSpec> scene;

    // Throws std::invalid_argument listing every violation at once.
    void validate() const;
};

RunConfig default_config();

// Shrunk widths/epochs for single-core experimentation.
RunConfig desk_preset();

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Unknown keys are rejected; a "preset" key ("paper" or "desk") is applied
// before the remaining keys overlay it.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

nlohmann::json config_to_json(const RunConfig& cfg);
// Effective-config echo for run output directories.
void write_config(const RunConfig& cfg, const std::string& path);

const char* predictor_name(PredictorKind kind);
PredictorKind predictor_from_name(const std::string& name);

}  // namespace trackcast

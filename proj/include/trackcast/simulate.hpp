#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "trackcast/geometry.hpp"
#include "trackcast/mot_io.hpp"

namespace trackcast {

enum class MotionKind { linear, sinusoidal, circular, stop_and_go };

// Parametric agent. All kinds share the linear drift (speed_x, speed_y);
// start is the position at birth (the circle center for circular motion).
struct AgentSpec {
    MotionKind motion = MotionKind::linear;
    double start_x = 0.0, start_y = 0.0;
    double speed_x = 0.0, speed_y = 0.0;
    double amplitude = 0.0, period = 1.0, phase = 0.0;  // sinusoidal
    double radius = 0.0, angular_speed = 0.0;           // circular
    int dwell = 0;  // stop-and-go: frames moving, then frames stopped
    int birth = 1;
    int death = 2;  // exclusive; alive on frames [birth, death)
    double box_w = 12.0, box_h = 28.0;
    std::vector<std::pair<int, int>> occlusions;  // inclusive frame windows
};

struct SceneSpec {
    std::uint64_t seed = 1;
    double frame_w = 512.0, frame_h = 512.0;
    int n_frames = 1;
    std::vector<AgentSpec> agents;
    double det_noise_std = 0.0;
    double miss_rate = 0.0;
    int emb_dim = 16;
    double emb_noise_std = 0.0;
    int context_dim = 0;     // 0 disables the per-frame context vector
    int context_regime = 0;  // basis index encoded when context is enabled

    void validate() const;
};

struct Scene {
    SceneSpec spec;
    MotDataset gt;  // ids are agent indices + 1, conf 1
    std::vector<FrameObservations> observations;
};

// Exact position of an agent at a frame (no noise).
BoundingBox agent_box(const AgentSpec& agent, int frame);

// Deterministic generation: one seeded stream, draws in documented order
// (identity embeddings per agent first, then per frame ascending and agent
// index ascending: miss uniform, 4 box gaussians, emb_dim embedding
// gaussians). Ground truth includes occluded frames; detections do not.
Scene generate_scene(const SceneSpec& spec);

// Per-frame context vector implied by the spec (unit basis vector of the
// regime), or an empty optional when the scene has no context.
std::optional<Eigen::VectorXd> scene_context(const SceneSpec& spec);

// Pinned suites: linear-clean, nonlinear-clean, occlusion-20, crowded-noisy,
// context-a, context-b.
std::map<std::string, SceneSpec> standard_suites();

nlohmann::json scene_spec_to_json(const SceneSpec& spec);
SceneSpec scene_spec_from_json(const nlohmann::json& j);

void write_scene_spec(const SceneSpec& spec, const std::string& path);
SceneSpec read_scene_spec(const std::string& path);

}  // namespace trackcast

#include "trackcast/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "trackcast/rng.hpp"

namespace trackcast {

namespace {

bool occluded_at(const AgentSpec& agent, int frame) {
    for (const auto& [lo, hi] : agent.occlusions) {
        if (frame >= lo && frame <= hi) return true;
    }
    return false;
}

}  // namespace

void SceneSpec::validate() const {
    std::string err;
    if (n_frames < 1) err += "n_frames must be >= 1; ";
    if (miss_rate < 0.0 || miss_rate >= 1.0) err += "miss_rate must be in [0, 1); ";
    if (det_noise_std < 0.0) err += "det_noise_std must be >= 0; ";
    if (emb_dim < 1) err += "emb_dim must be >= 1; ";
    if (emb_noise_std < 0.0) err += "emb_noise_std must be >= 0; ";
    if (frame_w <= 0.0 || frame_h <= 0.0) err += "frame size must be positive; ";
    if (context_dim < 0) err += "context_dim must be >= 0; ";
    if (context_dim > 0 && context_regime >= context_dim) {
        err += "context_regime must be < context_dim; ";
    }
    for (size_t i = 0; i < agents.size(); ++i) {
        const auto& a = agents[i];
        const std::string tag = "agent " + std::to_string(i) + ": ";
        if (!(a.birth < a.death) || a.death > n_frames + 1 || a.birth < 1) {
            err += tag + "requires 1 <= birth < death <= n_frames+1; ";
        }
        if (a.box_w <= 0.0 || a.box_h <= 0.0) err += tag + "box size must be positive; ";
        if (a.motion == MotionKind::sinusoidal && a.period <= 0.0) {
            err += tag + "sinusoidal period must be positive; ";
        }
        if (a.motion == MotionKind::stop_and_go && a.dwell < 1) {
            err += tag + "stop-and-go dwell must be >= 1; ";
        }
        for (const auto& [lo, hi] : a.occlusions) {
            if (lo > hi || lo < a.birth || hi >= a.death) {
                err += tag + "occlusion window outside lifetime; ";
            }
        }
    }
    if (!err.empty()) {
        throw std::invalid_argument("SceneSpec: " + err);
    }
}

BoundingBox agent_box(const AgentSpec& agent, int frame) {
    const double t = static_cast<double>(frame - agent.birth);
    double x = agent.start_x + agent.speed_x * t;
    double y = agent.start_y + agent.speed_y * t;
    switch (agent.motion) {
        case MotionKind::linear:
            break;
        case MotionKind::sinusoidal:
            y += agent.amplitude *
                 std::sin(2.0 * M_PI * t / agent.period + agent.phase);
            break;
        case MotionKind::circular:
            x = agent.start_x + agent.radius *
                                    std::cos(agent.angular_speed * t + agent.phase);
            y = agent.start_y + agent.radius *
                                    std::sin(agent.angular_speed * t + agent.phase);
            break;
        case MotionKind::stop_and_go: {
            const int ti = frame - agent.birth;
            const int cycle = 2 * agent.dwell;
            const int full = ti / cycle;
            const int rem = ti % cycle;
            const double moved =
                static_cast<double>(full * agent.dwell + std::min(rem, agent.dwell));
            x = agent.start_x + agent.speed_x * moved;
            y = agent.start_y + agent.speed_y * moved;
            break;
        }
    }
    return {x, y, agent.box_w, agent.box_h};
}

std::optional<Eigen::VectorXd> scene_context(const SceneSpec& spec) {
    if (spec.context_dim <= 0) return std::nullopt;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(spec.context_dim);
    c(spec.context_regime) = 1.0;
    return c;
}

Scene generate_scene(const SceneSpec& spec) {
    spec.validate();
    Scene scene;
    scene.spec = spec;
    Rng rng(spec.seed);

    // identity embeddings first, agent index order; resample until the new
    // vector is not too similar to any accepted one
    std::vector<Eigen::VectorXd> identities;
    identities.reserve(spec.agents.size());
    for (size_t a = 0; a < spec.agents.size(); ++a) {
        for (int attempt = 0; attempt < 1000; ++attempt) {
            Eigen::VectorXd v(spec.emb_dim);
            for (int i = 0; i < spec.emb_dim; ++i) v(i) = rng.gaussian();
            const double n = v.norm();
            if (n <= 0.0) continue;
            v /= n;
            bool ok = true;
            for (const auto& other : identities) {
                if (v.dot(other) > 0.5) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                identities.push_back(std::move(v));
                break;
            }
        }
        if (identities.size() != a + 1) {
            throw std::runtime_error(
                "generate_scene: could not draw a distinct identity embedding "
                "(too many agents for emb_dim?)");
        }
    }

    const auto context = scene_context(spec);
    scene.observations.reserve(spec.n_frames);
    for (int frame = 1; frame <= spec.n_frames; ++frame) {
        FrameObservations obs;
        obs.frame_index = frame;
        obs.context = context;
        for (size_t a = 0; a < spec.agents.size(); ++a) {
            const AgentSpec& agent = spec.agents[a];
            if (frame < agent.birth || frame >= agent.death) continue;
            const BoundingBox box = agent_box(agent, frame);

            MotRecord gt;
            gt.frame = frame;
            gt.id = static_cast<int>(a) + 1;
            gt.box = box;
            gt.conf = 1.0;
            scene.gt.records.push_back(gt);

            if (occluded_at(agent, frame)) continue;
            const double u_miss = rng.uniform();
            if (u_miss < spec.miss_rate) continue;

            BoundingBox det = box;
            det.x += spec.det_noise_std * rng.gaussian();
            det.y += spec.det_noise_std * rng.gaussian();
            det.w = std::max(1e-3, det.w + spec.det_noise_std * rng.gaussian());
            det.h = std::max(1e-3, det.h + spec.det_noise_std * rng.gaussian());

            Eigen::VectorXd emb = identities[a];
            for (int i = 0; i < spec.emb_dim; ++i) {
                emb(i) += spec.emb_noise_std * rng.gaussian();
            }
            const double n = emb.norm();
            if (n <= 0.0) {
                emb = identities[a];
            } else {
                emb /= n;
            }

            obs.detections.push_back(det);
            obs.confidences.push_back(1.0);
            obs.embeddings.push_back(std::move(emb));
        }
        scene.observations.push_back(std::move(obs));
    }
    return scene;
}

namespace {

// occlusion-20: agents travel along separated horizontal lanes, each fully
// occluded for up to 20 frames around its mid-frame crossing. The longest
// occlusions sit in the central lanes, where the keep-alive cost stays
// below threshold longest.
SceneSpec occlusion_suite() {
    SceneSpec s;
    s.seed = 303;
    s.frame_w = 512.0;
    s.frame_h = 512.0;
    s.n_frames = 150;
    s.det_noise_std = 0.2;
    s.miss_rate = 0.02;
    s.emb_dim = 16;
    s.emb_noise_std = 0.3;
    // lane y = 92 + 46 * i. The 20-frame occlusions sit in the central lanes
    // where the keep-alive cost stays below threshold for the whole window;
    // they exceed both the l-step fusion lookahead and what the appearance
    // term can bridge on its own. Outer lanes get short windows the fusion
    // stage covers either way.
    const int lens[8] = {8, 10, 20, 20, 20, 20, 10, 8};
    for (int i = 0; i < 8; ++i) {
        AgentSpec a;
        a.motion = MotionKind::linear;
        const bool rightwards = i % 2 == 0;
        const double speed = 2.4;
        a.start_x = rightwards ? 40.0 : 472.0;
        a.start_y = 92.0 + 46.0 * i;
        a.speed_x = rightwards ? speed : -speed;
        a.speed_y = 0.0;
        a.birth = 1 + i;  // stagger the crossings a little
        a.death = 149 + i > 150 ? 151 : 149 + i;
        a.box_w = 15.0 + (i % 3);
        a.box_h = 30.0 + 2 * (i % 4);
        // mid-frame crossing happens 216 / 2.4 = 90 frames after birth
        const int mid = a.birth + 90;
        const int len = lens[i];
        a.occlusions.push_back({mid - len / 2, mid - len / 2 + len - 1});
        s.agents.push_back(a);
    }
    return s;
}

SceneSpec context_suite(int regime, std::uint64_t seed) {
    SceneSpec s;
    s.seed = seed;
    s.frame_w = 512.0;
    s.frame_h = 512.0;
    s.n_frames = 120;
    s.emb_dim = 16;
    s.context_dim = 8;
    s.context_regime = regime;
    const double dir = regime == 0 ? 1.0 : -1.0;
    for (int i = 0; i < 6; ++i) {
        AgentSpec a;
        a.motion = MotionKind::stop_and_go;
        a.dwell = 14;  // longer than the past window, so stops hide direction
        a.start_x = dir > 0 ? 70.0 + 6.0 * i : 442.0 - 6.0 * i;
        a.start_y = 70.0 + 62.0 * i;
        a.speed_x = dir * 2.8;
        a.speed_y = 0.0;
        a.birth = 1 + 2 * i;  // staggered stop phases across agents
        a.death = 121;
        a.box_w = 12.0 + i;
        a.box_h = 26.0 + 2 * i;
        s.agents.push_back(a);
    }
    return s;
}

}  // namespace

std::map<std::string, SceneSpec> standard_suites() {
    std::map<std::string, SceneSpec> suites;

    {
        SceneSpec s;
        s.seed = 101;
        s.frame_w = 512.0;
        s.frame_h = 512.0;
        s.n_frames = 80;
        s.emb_dim = 16;
        const double starts[6][2] = {{50, 50},  {450, 80},  {60, 430},
                                     {460, 460}, {250, 40}, {40, 250}};
        const double vels[6][2] = {{3.0, 1.5},   {-3.0, 2.0}, {3.5, -2.0},
                                   {-2.5, -2.5}, {0.0, 3.0},  {4.0, 0.0}};
        for (int i = 0; i < 6; ++i) {
            AgentSpec a;
            a.motion = MotionKind::linear;
            a.start_x = starts[i][0];
            a.start_y = starts[i][1];
            a.speed_x = vels[i][0];
            a.speed_y = vels[i][1];
            a.birth = 1;
            a.death = 81;
            a.box_w = 12.0 + 2 * i;
            a.box_h = 26.0 + 3 * i;
            s.agents.push_back(a);
        }
        suites["linear-clean"] = s;
    }

    {
        SceneSpec s;
        s.seed = 202;
        s.frame_w = 512.0;
        s.frame_h = 512.0;
        s.n_frames = 120;
        s.emb_dim = 16;
        const double sin_params[4][5] = {
            // start_x, start_y, vx, amplitude, period
            {30, 150, 3.2, 25, 50},
            {30, 300, 3.0, 35, 64},
            {480, 120, -3.4, 20, 40},
            {480, 360, -2.8, 30, 56},
        };
        for (int i = 0; i < 4; ++i) {
            AgentSpec a;
            a.motion = MotionKind::sinusoidal;
            a.start_x = sin_params[i][0];
            a.start_y = sin_params[i][1];
            a.speed_x = sin_params[i][2];
            a.amplitude = sin_params[i][3];
            a.period = sin_params[i][4];
            a.phase = 0.8 * i;
            a.birth = 1;
            a.death = 121;
            a.box_w = 12.0 + 2 * i;
            a.box_h = 28.0 + 3 * i;
            s.agents.push_back(a);
        }
        const double circ_params[4][5] = {
            // center_x, center_y, radius, angular_speed, phase
            {150, 150, 70, 0.09, 0.0},
            {350, 150, 55, -0.11, 1.0},
            {150, 370, 80, 0.07, 2.0},
            {360, 360, 60, -0.08, 4.0},
        };
        for (int i = 0; i < 4; ++i) {
            AgentSpec a;
            a.motion = MotionKind::circular;
            a.start_x = circ_params[i][0];
            a.start_y = circ_params[i][1];
            a.radius = circ_params[i][2];
            a.angular_speed = circ_params[i][3];
            a.phase = circ_params[i][4];
            a.birth = 1;
            a.death = 121;
            a.box_w = 13.0 + 2 * i;
            a.box_h = 30.0 + 2 * i;
            s.agents.push_back(a);
        }
        suites["nonlinear-clean"] = s;
    }

    suites["occlusion-20"] = occlusion_suite();

    {
        SceneSpec s;
        s.seed = 404;
        s.frame_w = 512.0;
        s.frame_h = 512.0;
        s.n_frames = 100;
        s.det_noise_std = 1.0;
        s.miss_rate = 0.05;
        s.emb_dim = 16;
        s.emb_noise_std = 0.4;
        for (int i = 0; i < 5; ++i) {
            AgentSpec a;
            a.motion = MotionKind::linear;
            a.start_x = 40.0 + 90.0 * i;
            a.start_y = 40.0 + 20.0 * i;
            a.speed_x = (i % 2 ? -1.0 : 1.0) * (1.5 + 0.4 * i);
            a.speed_y = 2.0 + 0.3 * i;
            a.birth = 1;
            a.death = 101;
            a.box_w = 12.0 + i;
            a.box_h = 26.0 + 2 * i;
            if (i < 2) a.occlusions.push_back({40 + 5 * i, 44 + 5 * i});
            s.agents.push_back(a);
        }
        for (int i = 0; i < 4; ++i) {
            AgentSpec a;
            a.motion = MotionKind::sinusoidal;
            a.start_x = i % 2 ? 470.0 : 40.0;
            a.start_y = 180.0 + 40.0 * i;
            a.speed_x = (i % 2 ? -1.0 : 1.0) * (2.2 + 0.3 * i);
            a.amplitude = 18.0 + 4.0 * i;
            a.period = 44.0 + 8.0 * i;
            a.phase = 0.5 * i;
            a.birth = 1 + 4 * i;
            a.death = 101;
            a.box_w = 13.0 + i;
            a.box_h = 28.0 + 2 * i;
            if (i < 2) a.occlusions.push_back({60 + 6 * i, 65 + 6 * i});
            s.agents.push_back(a);
        }
        for (int i = 0; i < 3; ++i) {
            AgentSpec a;
            a.motion = MotionKind::circular;
            a.start_x = 140.0 + 110.0 * i;
            a.start_y = 380.0;
            a.radius = 45.0 + 10.0 * i;
            a.angular_speed = (i % 2 ? -1.0 : 1.0) * (0.08 + 0.02 * i);
            a.phase = 1.1 * i;
            a.birth = 1;
            a.death = 101;
            a.box_w = 14.0 + i;
            a.box_h = 30.0 + i;
            s.agents.push_back(a);
        }
        for (int i = 0; i < 2; ++i) {
            AgentSpec a;
            a.motion = MotionKind::stop_and_go;
            a.dwell = 10;
            a.start_x = 60.0 + 340.0 * i;
            a.start_y = 480.0;
            a.speed_x = i ? -2.5 : 2.5;
            a.speed_y = -1.0;
            a.birth = 1;
            a.death = 101;
            a.box_w = 15.0 + i;
            a.box_h = 32.0 + i;
            s.agents.push_back(a);
        }
        suites["crowded-noisy"] = s;
    }

    suites["context-a"] = context_suite(0, 505);
    suites["context-b"] = context_suite(1, 606);
    return suites;
}

namespace {

using nlohmann::json;

const char* motion_name(MotionKind m) {
    switch (m) {
        case MotionKind::linear: return "linear";
        case MotionKind::sinusoidal: return "sinusoidal";
        case MotionKind::circular: return "circular";
        case MotionKind::stop_and_go: return "stop-and-go";
    }
    return "linear";
}

MotionKind motion_from_name(const std::string& s) {
    if (s == "linear") return MotionKind::linear;
    if (s == "sinusoidal") return MotionKind::sinusoidal;
    if (s == "circular") return MotionKind::circular;
    if (s == "stop-and-go") return MotionKind::stop_and_go;
    throw std::invalid_argument("unknown motion kind: " + s);
}

}  // namespace

nlohmann::json scene_spec_to_json(const SceneSpec& spec) {
    json j;
    j["prng"] = "mt19937_64+box-muller";
    j["seed"] = spec.seed;
    j["frame_w"] = spec.frame_w;
    j["frame_h"] = spec.frame_h;
    j["n_frames"] = spec.n_frames;
    j["det_noise_std"] = spec.det_noise_std;
    j["miss_rate"] = spec.miss_rate;
    j["emb_dim"] = spec.emb_dim;
    j["emb_noise_std"] = spec.emb_noise_std;
    j["context_dim"] = spec.context_dim;
    j["context_regime"] = spec.context_regime;
    j["agents"] = json::array();
    for (const auto& a : spec.agents) {
        json ja;
        ja["motion"] = motion_name(a.motion);
        ja["start_x"] = a.start_x;
        ja["start_y"] = a.start_y;
        ja["speed_x"] = a.speed_x;
        ja["speed_y"] = a.speed_y;
        ja["amplitude"] = a.amplitude;
        ja["period"] = a.period;
        ja["phase"] = a.phase;
        ja["radius"] = a.radius;
        ja["angular_speed"] = a.angular_speed;
        ja["dwell"] = a.dwell;
        ja["birth"] = a.birth;
        ja["death"] = a.death;
        ja["box_w"] = a.box_w;
        ja["box_h"] = a.box_h;
        ja["occlusions"] = json::array();
        for (const auto& [lo, hi] : a.occlusions) {
            ja["occlusions"].push_back({lo, hi});
        }
        j["agents"].push_back(std::move(ja));
    }
    return j;
}

SceneSpec scene_spec_from_json(const nlohmann::json& j) {
    SceneSpec spec;
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.frame_w = j.at("frame_w").get<double>();
    spec.frame_h = j.at("frame_h").get<double>();
    spec.n_frames = j.at("n_frames").get<int>();
    spec.det_noise_std = j.value("det_noise_std", 0.0);
    spec.miss_rate = j.value("miss_rate", 0.0);
    spec.emb_dim = j.value("emb_dim", 16);
    spec.emb_noise_std = j.value("emb_noise_std", 0.0);
    spec.context_dim = j.value("context_dim", 0);
    spec.context_regime = j.value("context_regime", 0);
    for (const auto& ja : j.value("agents", json::array())) {
        AgentSpec a;
        a.motion = motion_from_name(ja.at("motion").get<std::string>());
        a.start_x = ja.at("start_x").get<double>();
        a.start_y = ja.at("start_y").get<double>();
        a.speed_x = ja.value("speed_x", 0.0);
        a.speed_y = ja.value("speed_y", 0.0);
        a.amplitude = ja.value("amplitude", 0.0);
        a.period = ja.value("period", 1.0);
        a.phase = ja.value("phase", 0.0);
        a.radius = ja.value("radius", 0.0);
        a.angular_speed = ja.value("angular_speed", 0.0);
        a.dwell = ja.value("dwell", 0);
        a.birth = ja.at("birth").get<int>();
        a.death = ja.at("death").get<int>();
        a.box_w = ja.at("box_w").get<double>();
        a.box_h = ja.at("box_h").get<double>();
        for (const auto& w : ja.value("occlusions", json::array())) {
            a.occlusions.emplace_back(w.at(0).get<int>(), w.at(1).get<int>());
        }
        spec.agents.push_back(std::move(a));
    }
    spec.validate();
    return spec;
}

void write_scene_spec(const SceneSpec& spec, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("write_scene_spec: cannot write " + path);
    }
    out << scene_spec_to_json(spec).dump(2) << '\n';
}

SceneSpec read_scene_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("read_scene_spec: cannot read " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("read_scene_spec: " + std::string(e.what()));
    }
    return scene_spec_from_json(j);
}

}  // namespace trackcast

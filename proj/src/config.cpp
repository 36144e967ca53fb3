#include "trackcast/config.hpp"

#include <fstream>
#include <sstream>

namespace trackcast {

namespace {

using nlohmann::json;

void expect_object(const json& j, const std::string& where,
                   std::vector<std::string>& errs) {
    if (!j.is_object()) {
        errs.push_back(where + " must be a JSON object");
    }
}

template <typename T>
void read_field(const json& j, const char* key, T& out,
                std::vector<std::string>& errs, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        errs.push_back(where + "." + key + " has the wrong type");
    }
}

void check_keys(const json& j, std::initializer_list<const char*> known,
                const std::string& where, std::vector<std::string>& errs) {
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* k : known) {
            if (key == k) {
                ok = true;
                break;
            }
        }
        if (!ok) errs.push_back(where + ": unknown key '" + key + "'");
    }
}

void parse_tracker(const json& j, TrackerConfig& t,
                   std::vector<std::string>& errs) {
    expect_object(j, "tracker", errs);
    if (!j.is_object()) return;
    check_keys(j,
               {"p", "q", "det_conf_thresh", "lambda_fuse", "l_fuse", "tau_fuse",
                "tau_iou", "lambda_occ", "max_time_occ", "thresh_occ", "max_lost",
                "frame_w", "frame_h", "predictor", "emb_momentum", "enable_fusion",
                "enable_iou", "enable_occlusion", "extended_output", "kalman"},
               "tracker", errs);
    read_field(j, "p", t.p, errs, "tracker");
    read_field(j, "q", t.q, errs, "tracker");
    read_field(j, "det_conf_thresh", t.det_conf_thresh, errs, "tracker");
    read_field(j, "lambda_fuse", t.lambda_fuse, errs, "tracker");
    read_field(j, "l_fuse", t.l_fuse, errs, "tracker");
    read_field(j, "tau_fuse", t.tau_fuse, errs, "tracker");
    read_field(j, "tau_iou", t.tau_iou, errs, "tracker");
    read_field(j, "lambda_occ", t.lambda_occ, errs, "tracker");
    read_field(j, "max_time_occ", t.max_time_occ, errs, "tracker");
    read_field(j, "thresh_occ", t.thresh_occ, errs, "tracker");
    read_field(j, "max_lost", t.max_lost, errs, "tracker");
    read_field(j, "frame_w", t.frame_w, errs, "tracker");
    read_field(j, "frame_h", t.frame_h, errs, "tracker");
    read_field(j, "emb_momentum", t.emb_momentum, errs, "tracker");
    read_field(j, "enable_fusion", t.enable_fusion, errs, "tracker");
    read_field(j, "enable_iou", t.enable_iou, errs, "tracker");
    read_field(j, "enable_occlusion", t.enable_occlusion, errs, "tracker");
    read_field(j, "extended_output", t.extended_output, errs, "tracker");
    if (j.contains("predictor")) {
        try {
            t.predictor = predictor_from_name(j.at("predictor").get<std::string>());
        } catch (const std::exception& e) {
            errs.push_back(std::string("tracker.predictor: ") + e.what());
        }
    }
    if (j.contains("kalman")) {
        const json& k = j.at("kalman");
        expect_object(k, "tracker.kalman", errs);
        if (k.is_object()) {
            check_keys(k,
                       {"pos_std_factor", "size_std_factor", "vel_std_factor",
                        "meas_std_factor", "init_pos_factor", "init_vel_factor"},
                       "tracker.kalman", errs);
            read_field(k, "pos_std_factor", t.kalman_noise.pos_std_factor, errs,
                       "tracker.kalman");
            read_field(k, "size_std_factor", t.kalman_noise.size_std_factor, errs,
                       "tracker.kalman");
            read_field(k, "vel_std_factor", t.kalman_noise.vel_std_factor, errs,
                       "tracker.kalman");
            read_field(k, "meas_std_factor", t.kalman_noise.meas_std_factor, errs,
                       "tracker.kalman");
            read_field(k, "init_pos_factor", t.kalman_noise.init_pos_factor, errs,
                       "tracker.kalman");
            read_field(k, "init_vel_factor", t.kalman_noise.init_vel_factor, errs,
                       "tracker.kalman");
        }
    }
}

void parse_forecaster(const json& j, ForecasterConfig& f,
                      std::vector<std::string>& errs) {
    expect_object(j, "forecaster", errs);
    if (!j.is_object()) return;
    check_keys(j,
               {"p", "q", "hidden", "embed_dim", "concat_dim", "input_scale",
                "center_past"},
               "forecaster", errs);
    read_field(j, "p", f.p, errs, "forecaster");
    read_field(j, "q", f.q, errs, "forecaster");
    read_field(j, "hidden", f.hidden, errs, "forecaster");
    read_field(j, "embed_dim", f.embed_dim, errs, "forecaster");
    read_field(j, "concat_dim", f.concat_dim, errs, "forecaster");
    read_field(j, "input_scale", f.input_scale, errs, "forecaster");
    read_field(j, "center_past", f.center_past, errs, "forecaster");
}

void parse_train(const json& j, TrainConfig& t, std::vector<std::string>& errs) {
    expect_object(j, "train", errs);
    if (!j.is_object()) return;
    check_keys(j,
               {"epochs", "batch_size", "lr", "lr_after_decay", "decay_epoch",
                "adam_beta1", "adam_beta2", "adam_eps", "s_init", "concat_mode",
                "seed", "window_stride", "max_windows"},
               "train", errs);
    read_field(j, "epochs", t.epochs, errs, "train");
    read_field(j, "batch_size", t.batch_size, errs, "train");
    read_field(j, "lr", t.lr, errs, "train");
    read_field(j, "lr_after_decay", t.lr_after_decay, errs, "train");
    read_field(j, "decay_epoch", t.decay_epoch, errs, "train");
    read_field(j, "adam_beta1", t.adam_beta1, errs, "train");
    read_field(j, "adam_beta2", t.adam_beta2, errs, "train");
    read_field(j, "adam_eps", t.adam_eps, errs, "train");
    read_field(j, "s_init", t.s_init, errs, "train");
    read_field(j, "seed", t.seed, errs, "train");
    read_field(j, "window_stride", t.window_stride, errs, "train");
    read_field(j, "max_windows", t.max_windows, errs, "train");
    if (j.contains("concat_mode")) {
        const auto mode = j.at("concat_mode").get<std::string>();
        if (mode == "corrected") {
            t.concat_mode = ConcatMode::corrected;
        } else if (mode == "literal") {
            t.concat_mode = ConcatMode::literal;
        } else {
            errs.push_back("train.concat_mode must be 'corrected' or 'literal'");
        }
    }
}

void parse_eval(const json& j, EvalConfig& e, std::vector<std::string>& errs) {
    expect_object(j, "eval", errs);
    if (!j.is_object()) return;
    check_keys(j, {"clear_iou_thresh", "strict_forecast", "anchor_stride"},
               "eval", errs);
    read_field(j, "clear_iou_thresh", e.clear_iou_thresh, errs, "eval");
    read_field(j, "strict_forecast", e.strict_forecast, errs, "eval");
    read_field(j, "anchor_stride", e.anchor_stride, errs, "eval");
}

}  // namespace

void RunConfig::validate() const {
    std::vector<std::string> errs = tracker.violations();
    try {
        forecaster.validate();
    } catch (const std::exception& e) {
        errs.push_back(e.what());
    }
    try {
        train.validate();
    } catch (const std::exception& e) {
        errs.push_back(e.what());
    }
    if (eval.clear_iou_thresh <= 0.0 || eval.clear_iou_thresh > 1.0) {
        errs.push_back("eval.clear_iou_thresh must lie in (0, 1]");
    }
    if (eval.anchor_stride < 1) {
        errs.push_back("eval.anchor_stride must be >= 1");
    }
    if (scene) {
        try {
            scene->validate();
        } catch (const std::exception& e) {
            errs.push_back(e.what());
        }
    }
    if (!errs.empty()) {
        std::ostringstream msg;
        msg << "configuration invalid (" << errs.size() << " violations):";
        for (const auto& e : errs) msg << "\n  - " << e;
        throw ConfigError(msg.str());
    }
}

RunConfig default_config() { return RunConfig{}; }

RunConfig desk_preset() {
    RunConfig cfg;
    cfg.tracker.q = 20;
    cfg.tracker.l_fuse = 10;
    cfg.forecaster.q = 20;
    cfg.forecaster.hidden = 48;
    cfg.forecaster.embed_dim = 8;
    cfg.forecaster.concat_dim = 96;
    cfg.forecaster.input_scale = 32.0;
    cfg.forecaster.center_past = true;
    cfg.train.epochs = 24;
    cfg.train.batch_size = 8;
    cfg.train.lr = 3e-3;
    cfg.train.lr_after_decay = 3e-4;
    cfg.train.decay_epoch = 16;
    cfg.train.seed = 7;
    cfg.train.window_stride = 2;
    cfg.train.max_windows = 4000;
    return cfg;
}

RunConfig config_from_json(const nlohmann::json& j) {
    std::vector<std::string> errs;
    if (!j.is_object()) {
        throw ConfigError("configuration root must be a JSON object");
    }
    RunConfig cfg;
    if (j.contains("preset")) {
        std::string preset;
        try {
            preset = j.at("preset").get<std::string>();
        } catch (const json::exception&) {
            throw ConfigError("preset must be a string ('paper' or 'desk')");
        }
        if (preset == "desk") {
            cfg = desk_preset();
        } else if (preset != "paper") {
            throw ConfigError("unknown preset '" + preset +
                              "' (expected 'paper' or 'desk')");
        }
    }
    check_keys(j, {"preset", "tracker", "forecaster", "train", "eval", "scene"},
               "config", errs);
    if (j.contains("tracker")) parse_tracker(j.at("tracker"), cfg.tracker, errs);
    if (j.contains("forecaster")) {
        parse_forecaster(j.at("forecaster"), cfg.forecaster, errs);
    }
    if (j.contains("train")) parse_train(j.at("train"), cfg.train, errs);
    if (j.contains("eval")) parse_eval(j.at("eval"), cfg.eval, errs);
    if (j.contains("scene")) {
        try {
            cfg.scene = scene_spec_from_json(j.at("scene"));
        } catch (const std::exception& e) {
            errs.push_back(std::string("scene: ") + e.what());
        }
    }
    if (!errs.empty()) {
        std::ostringstream msg;
        msg << "configuration invalid (" << errs.size() << " violations):";
        for (const auto& e : errs) msg << "\n  - " << e;
        throw ConfigError(msg.str());
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path);
    }
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config parse error: " + std::string(e.what()));
    }
    return config_from_json(j);
}

nlohmann::json config_to_json(const RunConfig& cfg) {
    json j;
    j["tracker"] = {{"p", cfg.tracker.p},
                    {"q", cfg.tracker.q},
                    {"det_conf_thresh", cfg.tracker.det_conf_thresh},
                    {"lambda_fuse", cfg.tracker.lambda_fuse},
                    {"l_fuse", cfg.tracker.l_fuse},
                    {"tau_fuse", cfg.tracker.tau_fuse},
                    {"tau_iou", cfg.tracker.tau_iou},
                    {"lambda_occ", cfg.tracker.lambda_occ},
                    {"max_time_occ", cfg.tracker.max_time_occ},
                    {"thresh_occ", cfg.tracker.thresh_occ},
                    {"max_lost", cfg.tracker.max_lost},
                    {"frame_w", cfg.tracker.frame_w},
                    {"frame_h", cfg.tracker.frame_h},
                    {"predictor", predictor_name(cfg.tracker.predictor)},
                    {"emb_momentum", cfg.tracker.emb_momentum},
                    {"enable_fusion", cfg.tracker.enable_fusion},
                    {"enable_iou", cfg.tracker.enable_iou},
                    {"enable_occlusion", cfg.tracker.enable_occlusion},
                    {"extended_output", cfg.tracker.extended_output},
                    {"kalman",
                     {{"pos_std_factor", cfg.tracker.kalman_noise.pos_std_factor},
                      {"size_std_factor", cfg.tracker.kalman_noise.size_std_factor},
                      {"vel_std_factor", cfg.tracker.kalman_noise.vel_std_factor},
                      {"meas_std_factor", cfg.tracker.kalman_noise.meas_std_factor},
                      {"init_pos_factor", cfg.tracker.kalman_noise.init_pos_factor},
                      {"init_vel_factor", cfg.tracker.kalman_noise.init_vel_factor}}}};
    j["forecaster"] = {{"p", cfg.forecaster.p},
                       {"q", cfg.forecaster.q},
                       {"hidden", cfg.forecaster.hidden},
                       {"embed_dim", cfg.forecaster.embed_dim},
                       {"concat_dim", cfg.forecaster.concat_dim},
                       {"input_scale", cfg.forecaster.input_scale},
                       {"center_past", cfg.forecaster.center_past}};
    j["train"] = {{"epochs", cfg.train.epochs},
                  {"batch_size", cfg.train.batch_size},
                  {"lr", cfg.train.lr},
                  {"lr_after_decay", cfg.train.lr_after_decay},
                  {"decay_epoch", cfg.train.decay_epoch},
                  {"adam_beta1", cfg.train.adam_beta1},
                  {"adam_beta2", cfg.train.adam_beta2},
                  {"adam_eps", cfg.train.adam_eps},
                  {"s_init", cfg.train.s_init},
                  {"concat_mode", cfg.train.concat_mode == ConcatMode::corrected
                                      ? "corrected"
                                      : "literal"},
                  {"seed", cfg.train.seed},
                  {"window_stride", cfg.train.window_stride},
                  {"max_windows", cfg.train.max_windows}};
    j["eval"] = {{"clear_iou_thresh", cfg.eval.clear_iou_thresh},
                 {"strict_forecast", cfg.eval.strict_forecast},
                 {"anchor_stride", cfg.eval.anchor_stride}};
    if (cfg.scene) {
        j["scene"] = scene_spec_to_json(*cfg.scene);
    }
    return j;
}

void write_config(const RunConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("write_config: cannot write " + path);
    }
    out << config_to_json(cfg).dump(2) << '\n';
}

const char* predictor_name(PredictorKind kind) {
    switch (kind) {
        case PredictorKind::cv: return "cv";
        case PredictorKind::kalman: return "kalman";
        case PredictorKind::learned: return "learned";
    }
    return "cv";
}

PredictorKind predictor_from_name(const std::string& name) {
    if (name == "cv") return PredictorKind::cv;
    if (name == "kalman") return PredictorKind::kalman;
    if (name == "learned") return PredictorKind::learned;
    throw std::invalid_argument("unknown predictor '" + name +
                                "' (expected cv, kalman, or learned)");
}

}  // namespace trackcast

// trackcast: joint multi-object tracking and trajectory forecasting on
// MOTChallenge-format files, with a synthetic-scene generator, a trainable
// recurrent forecaster, and CLEAR/IDF1 + ADE/FDE/AIOU/FIOU evaluation.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "trackcast/config.hpp"
#include "trackcast/metrics.hpp"
#include "trackcast/mot_io.hpp"
#include "trackcast/rng.hpp"
#include "trackcast/simulate.hpp"
#include "trackcast/tracker.hpp"
#include "trackcast/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace trackcast;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

// --out, overridable through the environment
fs::path resolve_out(const std::string& out_flag) {
    const char* env = std::getenv("TRACKCAST_OUT");
    fs::path out = env && *env ? fs::path(env) : fs::path(out_flag);
    fs::create_directories(out);
    return out;
}

RunConfig load_config_or_default(const std::string& path) {
    if (path.empty()) return default_config();
    return load_config(path);
}

void write_json_file(const json& j, const fs::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << j.dump(2) << '\n';
}

MotDataset outputs_to_dataset(const std::vector<TrackOutput>& outputs) {
    MotDataset data;
    for (const auto& o : outputs) {
        MotRecord r;
        r.frame = o.frame;
        r.id = o.id;
        r.box = o.box;
        r.conf = 1.0;
        r.flag = o.forecasted ? 1 : 0;
        data.records.push_back(r);
    }
    return data;
}

// detections + sidecar embeddings -> per-frame observations over the full
// frame range (missing frames age the tracker)
std::vector<FrameObservations> observations_from_files(
    const MotDataset& dets, const EmbeddingTable* embeddings) {
    std::vector<FrameObservations> result;
    if (dets.records.empty()) return result;
    const auto by_frame = dets.by_frame();
    const int first = by_frame.begin()->first;
    const int last = by_frame.rbegin()->first;
    const int fallback_dim =
        embeddings && embeddings->dim() > 0 ? embeddings->dim() : 8;
    for (int f = first; f <= last; ++f) {
        FrameObservations obs;
        obs.frame_index = f;
        const auto it = by_frame.find(f);
        if (it != by_frame.end()) {
            int det_index = 0;
            for (const size_t idx : it->second) {
                const MotRecord& r = dets.records[idx];
                obs.detections.push_back(r.box);
                obs.confidences.push_back(r.conf);
                if (embeddings && embeddings->dim() > 0) {
                    obs.embeddings.push_back(embeddings->get(f, det_index));
                } else {
                    obs.embeddings.push_back(Eigen::VectorXd::Constant(
                        fallback_dim, 1.0 / std::sqrt(double(fallback_dim))));
                }
                ++det_index;
            }
        }
        result.push_back(std::move(obs));
    }
    return result;
}

struct TrackRunResult {
    MotDataset results;
    TrackerStats stats;
};

TrackRunResult run_tracker(const RunConfig& cfg,
                           const std::vector<FrameObservations>& observations,
                           std::shared_ptr<const ForecasterParams> params) {
    Tracker tracker(cfg.tracker, std::move(params));
    std::vector<TrackOutput> all;
    for (const auto& obs : observations) {
        const auto out = tracker.step(obs);
        all.insert(all.end(), out.begin(), out.end());
    }
    return {outputs_to_dataset(all), tracker.stats()};
}

json stats_to_json(const TrackerStats& s) {
    return json{{"frames", s.frames},
                {"tracks_created", s.tracks_created},
                {"matches_fusion", s.matches_fusion},
                {"matches_iou", s.matches_iou},
                {"matches_unconfirmed", s.matches_unconfirmed},
                {"total_matches", s.total_matches()},
                {"forecast_kept_frames", s.forecast_kept},
                {"removed_tracks", s.removed},
                {"detections_in", s.detections_in}};
}

json tracking_report_to_json(const TrackingReport& r) {
    return json{{"mota", r.mota},
                {"idf1", r.idf1},
                {"id_switches", r.id_switches},
                {"fp", r.fp},
                {"fn", r.fn},
                {"mt", r.mt},
                {"ml", r.ml},
                {"gt_count", r.gt_count}};
}

json forecast_report_to_json(const ForecastReport& r) {
    return json{{"ade", r.ade},
                {"fde", r.fde},
                {"aiou", r.aiou},
                {"fiou", r.fiou},
                {"horizon", r.horizon},
                {"sample_count", r.sample_count}};
}

std::function<std::unique_ptr<MotionPredictor>()> predictor_factory(
    const RunConfig& cfg, PredictorKind kind,
    std::shared_ptr<const ForecasterParams> params) {
    switch (kind) {
        case PredictorKind::cv:
            return [] { return std::make_unique<ConstantVelocityPredictor>(); };
        case PredictorKind::kalman:
            return [noise = cfg.tracker.kalman_noise] {
                return std::make_unique<KalmanBoxPredictor>(noise);
            };
        case PredictorKind::learned:
            if (!params) {
                throw std::invalid_argument("learned predictor requires --params");
            }
            return [params] { return std::make_unique<LearnedPredictor>(params); };
    }
    return {};
}

void write_scene_outputs(const Scene& scene, const fs::path& out) {
    write_mot(scene.gt, (out / "gt.txt").string());
    MotDataset dets;
    EmbeddingTable embeddings(scene.spec.emb_dim);
    for (const auto& obs : scene.observations) {
        for (size_t d = 0; d < obs.detections.size(); ++d) {
            MotRecord r;
            r.frame = obs.frame_index;
            r.id = -1;
            r.box = obs.detections[d];
            r.conf = obs.confidences[d];
            dets.records.push_back(r);
            embeddings.put(obs.frame_index, static_cast<int>(d),
                           obs.embeddings[d]);
        }
    }
    write_mot(dets, (out / "det.txt").string());
    write_embeddings(embeddings, (out / "emb.csv").string());
    write_scene_spec(scene.spec, (out / "scene.json").string());
}

// gt dataset -> per-track sequences for the dataset builder
std::vector<TrackedSequence> sequences_from_gt(const MotDataset& gt) {
    std::vector<TrackedSequence> tracks;
    for (const auto& [id, indices] : gt.by_track()) {
        if (id < 0) continue;
        TrackedSequence seq;
        for (const size_t i : indices) {
            seq.frames.push_back(gt.records[i].frame);
            seq.boxes.push_back(gt.records[i].box);
        }
        tracks.push_back(std::move(seq));
    }
    return tracks;
}

int cmd_simulate(const std::string& config_path, const std::string& suite,
                 const std::string& out_flag) {
    RunConfig cfg = load_config_or_default(config_path);
    const fs::path out = resolve_out(out_flag);

    SceneSpec spec;
    if (!suite.empty()) {
        const auto suites = standard_suites();
        const auto it = suites.find(suite);
        if (it == suites.end()) {
            std::string names;
            for (const auto& [name, _] : suites) names += " " + name;
            throw ConfigError("unknown suite '" + suite + "'; available:" + names);
        }
        spec = it->second;
    } else if (cfg.scene) {
        spec = *cfg.scene;
    } else {
        throw ConfigError("simulate needs --suite or a 'scene' config section");
    }

    const Scene scene = generate_scene(spec);
    write_scene_outputs(scene, out);
    cfg.scene = spec;
    write_config(cfg, (out / "config.json").string());
    std::cout << "wrote " << (out / "gt.txt") << ", det.txt, emb.csv, scene.json\n";
    return 0;
}

int cmd_track(const std::string& config_path, const std::string& det_path,
              const std::string& emb_path, const std::string& params_path,
              const std::string& predictor_flag, const std::string& out_flag) {
    RunConfig cfg = load_config_or_default(config_path);
    if (!predictor_flag.empty()) {
        cfg.tracker.predictor = predictor_from_name(predictor_flag);
    }
    std::shared_ptr<const ForecasterParams> params;
    if (cfg.tracker.predictor == PredictorKind::learned) {
        if (params_path.empty()) {
            throw ConfigError("--predictor learned requires --params");
        }
        params = std::make_shared<ForecasterParams>(load_params(params_path));
    }
    const fs::path out = resolve_out(out_flag);

    const MotDataset dets = read_mot(det_path);
    std::optional<EmbeddingTable> embeddings;
    if (!emb_path.empty()) embeddings = read_embeddings(emb_path);

    const auto observations =
        observations_from_files(dets, embeddings ? &*embeddings : nullptr);
    const TrackRunResult run = run_tracker(cfg, observations, params);

    write_mot(run.results, (out / "results.txt").string(), true,
              cfg.tracker.extended_output);
    write_json_file(stats_to_json(run.stats), out / "stats.json");
    write_config(cfg, (out / "config.json").string());
    std::cout << "tracked " << run.stats.frames << " frames, "
              << run.stats.tracks_created << " tracks -> "
              << (out / "results.txt") << "\n";
    return 0;
}

int cmd_train(const std::string& config_path,
              const std::vector<std::string>& gt_paths,
              const std::vector<std::string>& scene_paths,
              const std::string& out_flag) {
    RunConfig cfg = load_config_or_default(config_path);
    const fs::path out = resolve_out(out_flag);
    if (!scene_paths.empty() && scene_paths.size() != gt_paths.size()) {
        throw ConfigError("--scene must be given once per --gt when used");
    }

    std::vector<TrainingSample> samples;
    for (size_t i = 0; i < gt_paths.size(); ++i) {
        const MotDataset gt = read_mot(gt_paths[i]);
        const auto tracks = sequences_from_gt(gt);
        std::optional<Eigen::VectorXd> ctx;
        int n_frames = 0;
        if (!scene_paths.empty()) {
            const SceneSpec spec = read_scene_spec(scene_paths[i]);
            ctx = scene_context(spec);
            n_frames = spec.n_frames;
            if (ctx && ctx->size() != cfg.forecaster.embed_dim) {
                throw ConfigError(
                    "scene context width does not match forecaster.embed_dim");
            }
        }
        std::vector<Eigen::VectorXd> frame_ctx;
        if (ctx) frame_ctx.assign(n_frames, *ctx);
        auto batch = build_training_samples(tracks, cfg.forecaster,
                                            ctx ? &frame_ctx : nullptr, 1,
                                            cfg.train.window_stride);
        samples.insert(samples.end(), std::make_move_iterator(batch.begin()),
                       std::make_move_iterator(batch.end()));
    }
    if (samples.empty()) {
        throw ConfigError(
            "no usable training windows (all tracks shorter than 3 frames?)");
    }
    if (cfg.train.max_windows > 0 &&
        static_cast<long>(samples.size()) > cfg.train.max_windows) {
        Rng rng(cfg.train.seed ^ 0xabcdef12345ULL);
        rng.shuffle(samples);
        samples.resize(cfg.train.max_windows);
    }

    std::cout << "training on " << samples.size() << " windows\n";
    const TrainResult result =
        train_forecaster(samples, cfg.forecaster, cfg.train);
    save_params(result.params, (out / "params.json").string());
    write_training_log(result.log, (out / "train_log.csv").string());
    write_config(cfg, (out / "config.json").string());
    std::cout << "final loss " << result.log.back().loss << " -> "
              << (out / "params.json") << "\n";
    return 0;
}

int cmd_forecast_eval(const std::string& config_path, const std::string& gt_path,
                      const std::string& params_path,
                      const std::string& predictor_flag,
                      const std::string& scene_path,
                      const std::string& out_flag) {
    RunConfig cfg = load_config_or_default(config_path);
    const fs::path out = resolve_out(out_flag);

    PredictorKind kind = cfg.tracker.predictor;
    std::shared_ptr<const ForecasterParams> params;
    if (!params_path.empty()) {
        params = std::make_shared<ForecasterParams>(load_params(params_path));
        kind = PredictorKind::learned;
    } else if (!predictor_flag.empty()) {
        kind = predictor_from_name(predictor_flag);
        if (kind == PredictorKind::learned) {
            throw ConfigError("--predictor learned requires --params");
        }
    } else if (kind == PredictorKind::learned) {
        throw ConfigError("learned predictor requires --params");
    }

    std::optional<Eigen::VectorXd> context;
    if (!scene_path.empty()) {
        context = scene_context(read_scene_spec(scene_path));
    }

    const MotDataset gt = read_mot(gt_path);
    ForecastEvalOptions opt;
    opt.p = cfg.forecaster.p;
    opt.q = cfg.forecaster.q;
    opt.strict = cfg.eval.strict_forecast;
    opt.stride = cfg.eval.anchor_stride;
    const ForecastReport rep =
        forecast_eval(gt, predictor_factory(cfg, kind, params), opt, context);

    write_json_file(forecast_report_to_json(rep), out / "forecast_report.json");
    std::ofstream csv(out / "forecast_row.csv");
    csv << "predictor,ade,fde,aiou,fiou,horizon,samples\n"
        << predictor_name(kind) << ',' << rep.ade << ',' << rep.fde << ','
        << rep.aiou << ',' << rep.fiou << ',' << rep.horizon << ','
        << rep.sample_count << '\n';
    write_config(cfg, (out / "config.json").string());
    std::cout << "ade " << rep.ade << " fde " << rep.fde << " aiou " << rep.aiou
              << " fiou " << rep.fiou << " over " << rep.sample_count
              << " anchors\n";
    return 0;
}

int cmd_evaluate(const std::string& config_path, const std::string& gt_path,
                 const std::string& res_path, const std::string& out_flag) {
    RunConfig cfg = load_config_or_default(config_path);
    const fs::path out = resolve_out(out_flag);
    const MotDataset gt = read_mot(gt_path);
    const MotDataset res = read_mot(res_path);
    const TrackingReport rep =
        evaluate_tracking(gt, res, cfg.eval.clear_iou_thresh);
    write_json_file(tracking_report_to_json(rep), out / "tracking_report.json");
    std::ofstream csv(out / "tracking_row.csv");
    csv << "mota,idf1,ids,fp,fn,mt,ml,gt\n"
        << rep.mota << ',' << rep.idf1 << ',' << rep.id_switches << ',' << rep.fp
        << ',' << rep.fn << ',' << rep.mt << ',' << rep.ml << ',' << rep.gt_count
        << '\n';
    write_config(cfg, (out / "config.json").string());
    std::cout << "MOTA " << rep.mota << " IDF1 " << rep.idf1 << " IDs "
              << rep.id_switches << " FP " << rep.fp << " FN " << rep.fn << "\n";
    return 0;
}

int cmd_ablate(const std::string& config_path, const std::string& params_path,
               const std::string& out_flag) {
    RunConfig cfg = load_config_or_default(config_path);
    const fs::path out = resolve_out(out_flag);
    std::shared_ptr<const ForecasterParams> params;
    if (!params_path.empty()) {
        params = std::make_shared<ForecasterParams>(load_params(params_path));
    }

    const auto suites = standard_suites();
    std::ostringstream md, csv;
    md << "# Ablation results\n\n";
    csv << "table,row,idf1,mt,ids,mota,ade,fde,aiou,fiou\n";

    // association component grid on the occlusion suite
    {
        const Scene scene = generate_scene(suites.at("occlusion-20"));
        RunConfig run_cfg = cfg;
        run_cfg.tracker.frame_w = scene.spec.frame_w;
        run_cfg.tracker.frame_h = scene.spec.frame_h;
        if (run_cfg.tracker.predictor == PredictorKind::learned && !params) {
            run_cfg.tracker.predictor = PredictorKind::cv;
        }

        md << "## Association components (occlusion-20)\n\n";
        md << "| fusion | iou | occlusion forecast | IDF1 | MT | IDs | MOTA |\n";
        md << "|---|---|---|---|---|---|---|\n";
        const bool grid[6][3] = {{true, false, false}, {true, true, false},
                                 {false, true, false}, {false, true, true},
                                 {true, false, true},  {true, true, true}};
        for (const auto& row : grid) {
            RunConfig c = run_cfg;
            c.tracker.enable_fusion = row[0];
            c.tracker.enable_iou = row[1];
            c.tracker.enable_occlusion = row[2];
            const auto run = run_tracker(c, scene.observations, params);
            const auto rep = evaluate_tracking(scene.gt, run.results,
                                               cfg.eval.clear_iou_thresh);
            auto mark = [](bool b) { return b ? "x" : " "; };
            md << "| " << mark(row[0]) << " | " << mark(row[1]) << " | "
               << mark(row[2]) << " | " << rep.idf1 << " | " << rep.mt << " | "
               << rep.id_switches << " | " << rep.mota << " |\n";
            csv << "components," << mark(row[0]) << mark(row[1]) << mark(row[2])
                << ',' << rep.idf1 << ',' << rep.mt << ',' << rep.id_switches
                << ',' << rep.mota << ",,,,\n";
        }
        md << "\n";
    }

    // predictor grid on the nonlinear suite
    {
        const Scene scene = generate_scene(suites.at("nonlinear-clean"));
        ForecastEvalOptions opt;
        opt.p = cfg.forecaster.p;
        opt.q = cfg.forecaster.q;
        opt.strict = cfg.eval.strict_forecast;
        opt.stride = cfg.eval.anchor_stride;

        md << "## Motion predictors (nonlinear-clean)\n\n";
        md << "| predictor | AIOU | FIOU | ADE | FDE |\n|---|---|---|---|---|\n";
        std::vector<PredictorKind> kinds{PredictorKind::cv, PredictorKind::kalman};
        if (params) kinds.push_back(PredictorKind::learned);
        for (const auto kind : kinds) {
            const auto rep =
                forecast_eval(scene.gt, predictor_factory(cfg, kind, params),
                              opt, scene_context(scene.spec));
            md << "| " << predictor_name(kind) << " | " << rep.aiou << " | "
               << rep.fiou << " | " << rep.ade << " | " << rep.fde << " |\n";
            csv << "predictors," << predictor_name(kind) << ",,,,," << rep.ade
                << ',' << rep.fde << ',' << rep.aiou << ',' << rep.fiou << '\n';
        }
        if (!params) {
            md << "\n(learned row requires --params)\n";
        }
    }

    std::ofstream(out / "ablation.md") << md.str();
    std::ofstream(out / "ablation.csv") << csv.str();
    write_config(cfg, (out / "config.json").string());
    std::cout << "wrote " << (out / "ablation.md") << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "trackcast: multi-object tracking with trajectory forecasting.\n"
        "Config defaults: past window p=10, horizon q=60, motion fusion "
        "lambda=0.75 over l=10 forecasts,\nocclusion keep-alive lambda=0.5 "
        "maxTime=20 thresh=0.55, max lost time 30 frames,\ndetection "
        "confidence 0.4, fusion gate 0.4, iou gate 0.5; training: Adam "
        "lr 1e-4 -> 1e-5 after epoch 20,\n30 epochs, batch 8, uncertainty "
        "weights init 0 in [-2, 5]. See --help on each subcommand."};
    app.require_subcommand(1);

    std::string config_path, out_flag = "out";
    std::string suite, det_path, emb_path, params_path, predictor_flag;
    std::string gt_path, res_path, scene_path;
    std::vector<std::string> gt_paths, scene_paths;

    const std::string defaults_footer =
        "Config defaults: tracker p=10 q=60 det_conf_thresh=0.4 "
        "lambda_fuse=0.75 l_fuse=10 tau_fuse=0.4 tau_iou=0.5 lambda_occ=0.5 "
        "max_time_occ=20 thresh_occ=0.55 max_lost=30 frame=1088x608 "
        "predictor=cv emb_momentum=0.9;\nforecaster hidden=256 embed_dim=256 "
        "concat_dim=512; train epochs=30 batch=8 lr=1e-4 lr_after_decay=1e-5 "
        "decay_epoch=20 adam=(0.9,0.999,1e-8) s_init=0;\n"
        "eval clear_iou_thresh=0.5 strict_forecast=true. "
        "TRACKCAST_OUT overrides --out.";

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path,
                        "JSON run configuration (empty = all defaults)");
        cmd->add_option("--out", out_flag, "output directory")
            ->capture_default_str();
        cmd->footer(defaults_footer);
    };

    auto* sim = app.add_subcommand(
        "simulate",
        "generate a synthetic scene (gt.txt, det.txt, emb.csv, scene.json)");
    add_common(sim);
    sim->add_option("--suite", suite,
                    "standard suite: linear-clean, nonlinear-clean, "
                    "occlusion-20, crowded-noisy, context-a, context-b");

    auto* trk =
        app.add_subcommand("track", "run the online tracker over a detection file");
    add_common(trk);
    trk->add_option("--det", det_path, "detections (MOT format)")->required();
    trk->add_option("--emb", emb_path, "appearance embeddings sidecar CSV");
    trk->add_option("--params", params_path, "forecaster checkpoint");
    trk->add_option("--predictor", predictor_flag, "cv | kalman | learned");

    auto* train = app.add_subcommand("train-forecaster",
                                     "train the trajectory forecaster on gt tracks");
    add_common(train);
    train->add_option("--gt", gt_paths, "ground-truth file(s)")->required();
    train->add_option("--scene", scene_paths,
                      "scene spec(s) providing the context vector, one per --gt");

    auto* feval = app.add_subcommand(
        "forecast-eval", "score a motion predictor against gt futures");
    add_common(feval);
    feval->add_option("--gt", gt_path, "ground-truth file")->required();
    feval->add_option("--params", params_path, "forecaster checkpoint");
    feval->add_option("--predictor", predictor_flag, "cv | kalman");
    feval->add_option("--scene", scene_path, "scene spec for the context vector");

    auto* eval = app.add_subcommand(
        "evaluate", "CLEAR/IDF1 tracking evaluation of a results file");
    add_common(eval);
    eval->add_option("--gt", gt_path, "ground-truth file")->required();
    eval->add_option("--res", res_path, "tracker results file")->required();

    auto* abl = app.add_subcommand(
        "ablate",
        "association-component and predictor grids on the standard suites");
    add_common(abl);
    abl->add_option("--params", params_path,
                    "forecaster checkpoint for the learned rows");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (sim->parsed()) return cmd_simulate(config_path, suite, out_flag);
        if (trk->parsed()) {
            return cmd_track(config_path, det_path, emb_path, params_path,
                             predictor_flag, out_flag);
        }
        if (train->parsed()) {
            return cmd_train(config_path, gt_paths, scene_paths, out_flag);
        }
        if (feval->parsed()) {
            return cmd_forecast_eval(config_path, gt_path, params_path,
                                     predictor_flag, scene_path, out_flag);
        }
        if (eval->parsed()) {
            return cmd_evaluate(config_path, gt_path, res_path, out_flag);
        }
        if (abl->parsed()) return cmd_ablate(config_path, params_path, out_flag);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitValidation;
}

#include "trackcast/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "trackcast/assignment.hpp"

namespace trackcast {

std::vector<std::string> TrackerConfig::violations() const {
    std::vector<std::string> v;
    if (p < 2) v.push_back("tracker.p must be >= 2");
    if (q < 1) v.push_back("tracker.q must be >= 1");
    auto unit = [&](double x, const char* name) {
        if (x < 0.0 || x > 1.0) {
            v.push_back(std::string(name) + " must lie in [0, 1]");
        }
    };
    unit(det_conf_thresh, "tracker.det_conf_thresh");
    unit(lambda_fuse, "tracker.lambda_fuse");
    unit(lambda_occ, "tracker.lambda_occ");
    unit(thresh_occ, "tracker.thresh_occ");
    unit(emb_momentum, "tracker.emb_momentum");
    if (l_fuse < 1) v.push_back("tracker.l_fuse must be >= 1");
    if (l_fuse > q) v.push_back("tracker.l_fuse must be <= tracker.q");
    if (tau_fuse < 0.0) v.push_back("tracker.tau_fuse must be >= 0");
    if (tau_iou < 0.0) v.push_back("tracker.tau_iou must be >= 0");
    if (max_time_occ < 1) v.push_back("tracker.max_time_occ must be >= 1");
    if (max_lost < 1) v.push_back("tracker.max_lost must be >= 1");
    if (max_time_occ > max_lost) {
        v.push_back("tracker.max_time_occ must be <= tracker.max_lost");
    }
    if (frame_w <= 0.0 || frame_h <= 0.0) {
        v.push_back("tracker.frame_w and tracker.frame_h must be positive");
    }
    if (!enable_fusion && !enable_iou && !enable_occlusion) {
        v.push_back("tracker: at least one association stage must be enabled");
    }
    return v;
}

void TrackerConfig::validate() const {
    const auto v = violations();
    if (v.empty()) return;
    std::ostringstream msg;
    msg << "TrackerConfig:";
    for (const auto& s : v) msg << ' ' << s << ';';
    throw std::invalid_argument(msg.str());
}

Eigen::MatrixXd fuse_motion(const Eigen::MatrixXd& reid_dist,
                            const std::vector<const TrackRecord*>& tracks,
                            const std::vector<BoundingBox>& detections,
                            double lambda, int l) {
    const auto n_tracks = static_cast<Eigen::Index>(tracks.size());
    const auto n_dets = static_cast<Eigen::Index>(detections.size());
    if (reid_dist.rows() != n_tracks || reid_dist.cols() != n_dets) {
        throw std::invalid_argument("fuse_motion: reid matrix shape mismatch");
    }
    Eigen::MatrixXd costs(n_tracks, n_dets);
    for (Eigen::Index i = 0; i < n_tracks; ++i) {
        const TrackRecord& track = *tracks[i];
        Eigen::RowVectorXd d(n_dets);
        for (Eigen::Index j = 0; j < n_dets; ++j) {
            d(j) = 1.0 - iou(track.last_box, detections[j]);
        }
        if (track.horizon && !track.horizon->boxes.empty()) {
            const int l_eff =
                std::min<int>(l, static_cast<int>(track.horizon->boxes.size()));
            const std::vector<BoundingBox> fc(track.horizon->boxes.begin(),
                                              track.horizon->boxes.begin() + l_eff);
            const Eigen::MatrixXd dists = iou_distance(fc, detections);
            const Eigen::RowVectorXd m = dists.colwise().minCoeff();
            d = d.cwiseProduct(m);
        }
        Eigen::RowVectorXd reid_row = reid_dist.row(i);
        for (Eigen::Index j = 0; j < n_dets; ++j) {
            if (d(j) >= 1.0) reid_row(j) *= 2.0;
        }
        costs.row(i) = lambda * reid_row + (1.0 - lambda) * d;
    }
    return costs;
}

std::optional<BoundingBox> occlusion_forecast(const TrackRecord& track,
                                              const TrackerConfig& cfg) {
    if (!track.horizon || track.horizon->boxes.empty()) return std::nullopt;
    const double cost0 =
        static_cast<double>(track.lost_time) / cfg.max_time_occ;
    const int last = static_cast<int>(track.horizon->boxes.size()) - 1;
    const BoundingBox& box =
        track.horizon->boxes[std::min(track.lost_time, last)];
    const double dist = center_distance_normalized(box, cfg.frame_w, cfg.frame_h);
    const double cost = cfg.lambda_occ * dist + (1.0 - cfg.lambda_occ) * cost0;
    if (cost < cfg.thresh_occ) return box;
    return std::nullopt;
}

Eigen::VectorXd smooth_embedding(const Eigen::VectorXd& old_emb,
                                 const Eigen::VectorXd& new_emb,
                                 double momentum) {
    if (old_emb.size() != new_emb.size()) {
        throw std::invalid_argument("smooth_embedding: dimension mismatch");
    }
    Eigen::VectorXd blended = momentum * old_emb + (1.0 - momentum) * new_emb;
    const double n = blended.norm();
    if (n <= 0.0) {
        throw std::runtime_error("smooth_embedding: blend cancelled to zero");
    }
    return blended / n;
}

Tracker::Tracker(TrackerConfig cfg,
                 std::shared_ptr<const ForecasterParams> params)
    : cfg_(std::move(cfg)), params_(std::move(params)) {
    cfg_.validate();
    if (cfg_.predictor == PredictorKind::learned && !params_) {
        throw std::invalid_argument(
            "Tracker: learned predictor requires forecaster params");
    }
}

std::unique_ptr<MotionPredictor> Tracker::make_predictor() const {
    switch (cfg_.predictor) {
        case PredictorKind::cv:
            return std::make_unique<ConstantVelocityPredictor>();
        case PredictorKind::kalman:
            return std::make_unique<KalmanBoxPredictor>(cfg_.kalman_noise);
        case PredictorKind::learned:
            return std::make_unique<LearnedPredictor>(params_);
    }
    return nullptr;
}

TrackRecord* Tracker::spawn(const BoundingBox& box, const Eigen::VectorXd& emb,
                            int frame, bool confirmed) {
    auto t = std::make_unique<TrackRecord>();
    t->id = next_id_++;
    t->state = confirmed ? TrackState::Tracked : TrackState::New;
    t->history.push_back({box, Velocity{}});
    t->embedding = emb;
    t->last_box = box;
    t->last_frame = frame;
    t->predictor = make_predictor();
    t->predictor->observe(box);
    ++stats_.tracks_created;
    tracks_.push_back(std::move(t));
    return tracks_.back().get();
}

void Tracker::apply_match(TrackRecord& t, const BoundingBox& box,
                          const Eigen::VectorXd& emb, int frame) {
    Velocity vel{};
    if (!t.history.empty()) {
        const BoundingBox& prev = t.history.back().box;
        vel = {box.x - prev.x, box.y - prev.y, box.w - prev.w, box.h - prev.h};
    }
    if (!std::isfinite(vel.dx) || !std::isfinite(vel.dy) ||
        !std::isfinite(vel.dw) || !std::isfinite(vel.dh)) {
        throw std::runtime_error("Tracker: non-finite velocity in history");
    }
    t.history.push_back({box, vel});
    while (static_cast<int>(t.history.size()) > cfg_.p) {
        t.history.erase(t.history.begin());
    }
    t.embedding = smooth_embedding(t.embedding, emb, cfg_.emb_momentum);
    t.last_box = box;
    const int gap = std::max(1, frame - t.last_frame);
    t.predictor->observe(box, gap);
    t.last_frame = frame;
    t.lost_time = 0;
    t.state = TrackState::Tracked;
}

std::vector<TrackOutput> Tracker::step(const FrameObservations& obs) {
    if (started_ && obs.frame_index <= last_frame_) {
        throw std::invalid_argument(
            "Tracker::step: frame indices must strictly increase (got " +
            std::to_string(obs.frame_index) + " after " +
            std::to_string(last_frame_) + ")");
    }
    obs.validate();
    const int frame = obs.frame_index;
    const bool first_frame = !started_;

    // confident detections
    std::vector<BoundingBox> det_boxes;
    std::vector<Eigen::VectorXd> det_embs;
    for (size_t i = 0; i < obs.detections.size(); ++i) {
        if (obs.confidences[i] >= cfg_.det_conf_thresh) {
            det_boxes.push_back(obs.detections[i]);
            det_embs.push_back(obs.embeddings[i]);
        }
    }
    stats_.detections_in += static_cast<long>(det_boxes.size());

    // refresh horizons of tracked tracks; lost tracks keep the horizon from
    // their last detection
    for (auto& t : tracks_) {
        if (t->state != TrackState::Tracked) continue;
        if (obs.context) t->predictor->set_context(*obs.context);
        if (t->predictor->ready()) {
            ForecastHorizon h = t->predictor->predict(cfg_.q);
            h.origin_frame = frame;
            t->horizon = std::move(h);
        }
    }

    std::vector<char> det_taken(det_boxes.size(), 0);
    std::vector<TrackRecord*> matched_by;  // parallel to det index
    matched_by.assign(det_boxes.size(), nullptr);
    std::vector<char> track_matched(tracks_.size(), 0);

    auto run_stage = [&](const std::vector<size_t>& pool_idx,
                         const Eigen::MatrixXd& cost, double gate,
                         long* counter) {
        std::vector<int> free_dets;
        for (size_t j = 0; j < det_boxes.size(); ++j) {
            if (!det_taken[j]) free_dets.push_back(static_cast<int>(j));
        }
        const AssignmentResult res = solve_assignment(cost, gate);
        for (const auto& [r, c] : res.matches) {
            const size_t ti = pool_idx[static_cast<size_t>(r)];
            const int dj = free_dets[static_cast<size_t>(c)];
            track_matched[ti] = 1;
            det_taken[dj] = 1;
            matched_by[dj] = tracks_[ti].get();
            ++(*counter);
        }
    };

    auto free_det_boxes = [&]() {
        std::vector<BoundingBox> out;
        for (size_t j = 0; j < det_boxes.size(); ++j) {
            if (!det_taken[j]) out.push_back(det_boxes[j]);
        }
        return out;
    };
    auto free_det_embs = [&]() {
        std::vector<Eigen::VectorXd> out;
        for (size_t j = 0; j < det_boxes.size(); ++j) {
            if (!det_taken[j]) out.push_back(det_embs[j]);
        }
        return out;
    };

    // stage 1: appearance fused with short-term forecasts, tracked + lost
    if (cfg_.enable_fusion) {
        std::vector<size_t> pool;
        std::vector<const TrackRecord*> pool_tracks;
        std::vector<Eigen::VectorXd> pool_embs;
        for (size_t i = 0; i < tracks_.size(); ++i) {
            const auto& t = tracks_[i];
            if (t->state == TrackState::Tracked || t->state == TrackState::Lost) {
                pool.push_back(i);
                pool_tracks.push_back(t.get());
                pool_embs.push_back(t->embedding);
            }
        }
        const auto boxes = free_det_boxes();
        if (!pool.empty() && !boxes.empty()) {
            const Eigen::MatrixXd reid = cosine_distance(pool_embs, free_det_embs());
            const Eigen::MatrixXd cost =
                fuse_motion(reid, pool_tracks, boxes, cfg_.lambda_fuse, cfg_.l_fuse);
            run_stage(pool, cost, cfg_.tau_fuse, &stats_.matches_fusion);
        }
    }

    // stage 2: plain overlap for tracks that were tracked last frame
    if (cfg_.enable_iou) {
        std::vector<size_t> pool;
        std::vector<BoundingBox> pool_boxes;
        for (size_t i = 0; i < tracks_.size(); ++i) {
            if (track_matched[i]) continue;
            if (tracks_[i]->state == TrackState::Tracked) {
                pool.push_back(i);
                pool_boxes.push_back(tracks_[i]->last_box);
            }
        }
        const auto boxes = free_det_boxes();
        if (!pool.empty() && !boxes.empty()) {
            run_stage(pool, iou_distance(pool_boxes, boxes), cfg_.tau_iou,
                      &stats_.matches_iou);
        }
    }

    // confirmation round for one-frame-old candidates
    {
        std::vector<size_t> pool;
        std::vector<BoundingBox> pool_boxes;
        for (size_t i = 0; i < tracks_.size(); ++i) {
            if (track_matched[i]) continue;
            if (tracks_[i]->state == TrackState::New) {
                pool.push_back(i);
                pool_boxes.push_back(tracks_[i]->last_box);
            }
        }
        const auto boxes = free_det_boxes();
        if (!pool.empty() && !boxes.empty()) {
            run_stage(pool, iou_distance(pool_boxes, boxes), cfg_.tau_iou,
                      &stats_.matches_unconfirmed);
        }
    }

    std::vector<TrackOutput> out;

    // detection-backed updates
    for (size_t j = 0; j < det_boxes.size(); ++j) {
        if (TrackRecord* t = matched_by[j]) {
            apply_match(*t, det_boxes[j], det_embs[j], frame);
            out.push_back({frame, t->id, det_boxes[j], false});
        }
    }

    // unmatched tracks: stage 3 keep-alive, aging, removal
    std::vector<size_t> to_drop;
    for (size_t i = 0; i < tracks_.size(); ++i) {
        if (track_matched[i]) continue;
        TrackRecord& t = *tracks_[i];
        if (t.state == TrackState::New) {
            to_drop.push_back(i);  // failed the one-frame confirmation
            continue;
        }
        if (t.state == TrackState::Removed) continue;
        if (cfg_.enable_occlusion) {
            if (const auto kept = occlusion_forecast(t, cfg_)) {
                out.push_back({frame, t.id, *kept, true});
                t.last_box = *kept;
                ++stats_.forecast_kept;
            }
        }
        t.state = TrackState::Lost;
        ++t.lost_time;
        if (t.lost_time >= cfg_.max_lost) {
            t.state = TrackState::Removed;
            ++stats_.removed;
        }
    }

    // new tracks from leftover detections; emitted right away only on the
    // tracker's first frame
    for (size_t j = 0; j < det_boxes.size(); ++j) {
        if (det_taken[j]) continue;
        TrackRecord* t = spawn(det_boxes[j], det_embs[j], frame, first_frame);
        if (obs.context) t->predictor->set_context(*obs.context);
        if (first_frame) {
            out.push_back({frame, t->id, det_boxes[j], false});
        }
    }

    for (auto it = to_drop.rbegin(); it != to_drop.rend(); ++it) {
        tracks_.erase(tracks_.begin() + static_cast<long>(*it));
    }

    started_ = true;
    last_frame_ = frame;
    ++stats_.frames;

    std::sort(out.begin(), out.end(), [](const TrackOutput& a, const TrackOutput& b) {
        return a.id < b.id;
    });
    return out;
}

}  // namespace trackcast

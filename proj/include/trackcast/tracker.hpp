#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "trackcast/forecaster.hpp"
#include "trackcast/geometry.hpp"
#include "trackcast/kalman.hpp"
#include "trackcast/motion.hpp"

namespace trackcast {

enum class PredictorKind { cv, kalman, learned };

struct TrackerConfig {
    int p = 10;
    int q = 60;
    double det_conf_thresh = 0.4;
    double lambda_fuse = 0.75;
    int l_fuse = 10;
    double tau_fuse = 0.4;
    double tau_iou = 0.5;
    double lambda_occ = 0.5;
    int max_time_occ = 20;
    double thresh_occ = 0.55;
    int max_lost = 30;
    double frame_w = 1088.0;
    double frame_h = 608.0;
    PredictorKind predictor = PredictorKind::cv;
    double emb_momentum = 0.9;
    bool enable_fusion = true;     // stage 1, appearance + forecast fusion
    bool enable_iou = true;        // stage 2, box overlap
    bool enable_occlusion = true;  // stage 3, forecast keep-alive
    bool extended_output = false;  // extra flag column in results

    // Appends human-readable violations; empty result means valid.
    std::vector<std::string> violations() const;
    void validate() const;  // throws listing every violation

    KalmanNoise kalman_noise;
};

// New -> Tracked -> Lost -> {Tracked, Removed}; Removed is terminal. New
// tracks that fail their confirmation match are dropped without entering
// the lifecycle.
enum class TrackState { New, Tracked, Lost, Removed };

struct TrackRecord {
    int id = 0;
    TrackState state = TrackState::New;
    std::vector<BoxWithVelocity> history;  // detections only, at most p
    Eigen::VectorXd embedding;             // smoothed, unit norm
    std::optional<ForecastHorizon> horizon;
    int lost_time = 0;   // consecutive unmatched frames
    int last_frame = 0;  // frame of the last matched detection
    // Most recent estimated location: the detection on a match, the kept
    // forecast box while occluded. Drives the geometric association terms.
    BoundingBox last_box;
    std::unique_ptr<MotionPredictor> predictor;
};

struct TrackOutput {
    int frame = 0;
    int id = 0;
    BoundingBox box;
    bool forecasted = false;
};

struct TrackerStats {
    long frames = 0;
    long tracks_created = 0;
    long matches_fusion = 0;
    long matches_iou = 0;
    long matches_unconfirmed = 0;
    long forecast_kept = 0;
    long removed = 0;
    long detections_in = 0;

    long total_matches() const {
        return matches_fusion + matches_iou + matches_unconfirmed;
    }
};

// Algorithm of the motion-fusion stage: per track, the IOU distance of its
// last box against the detections, sharpened by the best of its first l
// forecast boxes, gating the appearance distance where geometry rules the
// pair out. Returns lambda * reid + (1 - lambda) * motion
Eigen::MatrixXd fuse_motion(const Eigen::MatrixXd& reid_dist,
                            const std::vector<const TrackRecord*>& tracks,
                            const std::vector<BoundingBox>& detections,
                            double lambda, int l);

// Occlusion keep-alive: combines where the forecast sits in the frame with
// how long the track has been lost; returns the forecast box when the cost
// stays below the threshold.
std::optional<BoundingBox> occlusion_forecast(const TrackRecord& track,
                                              const TrackerConfig& cfg);

// Renormalized momentum blend; throws when the blend cancels to zero.
Eigen::VectorXd smooth_embedding(const Eigen::VectorXd& old_emb,
                                 const Eigen::VectorXd& new_emb,
                                 double momentum);

class Tracker {
public:
    explicit Tracker(TrackerConfig cfg,
                     std::shared_ptr<const ForecasterParams> params = nullptr);

    // One frame of the online loop; frame indices must strictly increase.
    // Emits detection-backed boxes and forecast keep-alives.
    std::vector<TrackOutput> step(const FrameObservations& obs);

    const TrackerStats& stats() const { return stats_; }
    const std::vector<std::unique_ptr<TrackRecord>>& tracks() const {
        return tracks_;
    }

private:
    std::unique_ptr<MotionPredictor> make_predictor() const;
    TrackRecord* spawn(const BoundingBox& box, const Eigen::VectorXd& emb,
                       int frame, bool confirmed);
    void apply_match(TrackRecord& t, const BoundingBox& box,
                     const Eigen::VectorXd& emb, int frame);

    TrackerConfig cfg_;
    std::shared_ptr<const ForecasterParams> params_;
    std::vector<std::unique_ptr<TrackRecord>> tracks_;
    TrackerStats stats_;
    int next_id_ = 1;
    int last_frame_ = 0;
    bool started_ = false;
};

}  // namespace trackcast

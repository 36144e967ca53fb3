#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "trackcast/motion.hpp"
#include "trackcast/mot_io.hpp"

namespace trackcast {

struct TrackingReport {
    double mota = 0.0;  // can be negative
    double idf1 = 0.0;
    long id_switches = 0;
    long fp = 0;
    long fn = 0;
    long mt = 0;
    long ml = 0;
    long gt_count = 0;
};

// CLEAR-style per-frame accounting: previous-frame correspondences are kept
// while they still overlap, the rest goes through gated linear assignment on
// the IOU distance. MT/ML use the 80%/20% lifetime coverage convention.
// idf1 is left at zero; evaluate_tracking fills both.
TrackingReport clear_mot(const MotDataset& gt, const MotDataset& hyp,
                         double iou_match_thresh = 0.5);

// Identity-level F1 from a trajectory-to-trajectory matching that maximizes
// the number of IOU-overlapping frames.
double idf1(const MotDataset& gt, const MotDataset& hyp,
            double iou_match_thresh = 0.5);

TrackingReport evaluate_tracking(const MotDataset& gt, const MotDataset& hyp,
                                 double iou_match_thresh = 0.5);

// (ade, fde) of forecast centroids over the valid prefix.
std::pair<double, double> displacement(const ForecastHorizon& pred,
                                       const std::vector<BoundingBox>& gt_future,
                                       int valid_len);

// (aiou, fiou) over the valid prefix.
std::pair<double, double> overlap_scores(const ForecastHorizon& pred,
                                         const std::vector<BoundingBox>& gt_future,
                                         int valid_len);

struct ForecastSample {
    double ade = 0.0, fde = 0.0, aiou = 0.0, fiou = 0.0;
    double weight = 1.0;
};

struct ForecastReport {
    double ade = 0.0, fde = 0.0, aiou = 0.0, fiou = 0.0;
    int horizon = 0;
    long sample_count = 0;
};

// Weight-averaged report; throws on zero samples.
ForecastReport aggregate_forecast(const std::vector<ForecastSample>& samples,
                                  int horizon);

struct ForecastEvalOptions {
    int p = 10;
    int q = 60;
    bool strict = true;  // only anchors with a full q-length future
    int stride = 1;      // anchor subsampling
};

// Runs a fresh predictor along every ground-truth track and scores its
// forecasts at every anchor with >= 2 past and >= 1 future box (a full
// future in strict mode). Variable-length anchors are weighted by their
// prefix length.
ForecastReport forecast_eval(
    const MotDataset& gt,
    const std::function<std::unique_ptr<MotionPredictor>()>& make_predictor,
    const ForecastEvalOptions& options,
    const std::optional<Eigen::VectorXd>& context = std::nullopt);

}  // namespace trackcast

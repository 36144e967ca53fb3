#include "trackcast/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "trackcast/assignment.hpp"

namespace trackcast {

namespace {

// frame -> (id -> box); duplicate (frame, id) pairs keep the first box
std::map<int, std::map<int, BoundingBox>> frame_maps(const MotDataset& data) {
    std::map<int, std::map<int, BoundingBox>> out;
    for (const auto& r : data.records) {
        out[r.frame].emplace(r.id, r.box);
    }
    return out;
}

}  // namespace

TrackingReport clear_mot(const MotDataset& gt, const MotDataset& hyp,
                         double iou_match_thresh) {
    const auto gt_frames = frame_maps(gt);
    const auto hyp_frames = frame_maps(hyp);
    // strict gate with room for exact-threshold overlaps
    const double gate = (1.0 - iou_match_thresh) + 1e-9;

    std::set<int> frames;
    for (const auto& [f, _] : gt_frames) frames.insert(f);
    for (const auto& [f, _] : hyp_frames) frames.insert(f);

    TrackingReport rep;
    std::map<int, int> last_hyp;        // gt id -> most recent hyp id
    std::map<int, long> gt_lifetime;    // gt id -> frames present
    std::map<int, long> gt_covered;     // gt id -> frames matched

    static const std::map<int, BoundingBox> kEmpty;
    for (const int f : frames) {
        const auto git = gt_frames.find(f);
        const auto hit = hyp_frames.find(f);
        const auto& gmap = git != gt_frames.end() ? git->second : kEmpty;
        const auto& hmap = hit != hyp_frames.end() ? hit->second : kEmpty;
        rep.gt_count += static_cast<long>(gmap.size());
        for (const auto& [gid, _] : gmap) ++gt_lifetime[gid];

        std::set<int> free_gt, free_hyp;
        for (const auto& [gid, _] : gmap) free_gt.insert(gid);
        for (const auto& [hid, _] : hmap) free_hyp.insert(hid);

        std::vector<std::pair<int, int>> pairs;  // (gt id, hyp id)

        // keep existing correspondences that still overlap
        for (const auto& [gid, gbox] : gmap) {
            const auto prev = last_hyp.find(gid);
            if (prev == last_hyp.end()) continue;
            const auto hb = hmap.find(prev->second);
            if (hb == hmap.end() || !free_hyp.count(prev->second)) continue;
            if (iou(gbox, hb->second) >= iou_match_thresh) {
                pairs.emplace_back(gid, prev->second);
                free_gt.erase(gid);
                free_hyp.erase(prev->second);
            }
        }

        // assign the rest by overlap
        if (!free_gt.empty() && !free_hyp.empty()) {
            const std::vector<int> gids(free_gt.begin(), free_gt.end());
            const std::vector<int> hids(free_hyp.begin(), free_hyp.end());
            std::vector<BoundingBox> gboxes, hboxes;
            for (int gid : gids) gboxes.push_back(gmap.at(gid));
            for (int hid : hids) hboxes.push_back(hmap.at(hid));
            const AssignmentResult res =
                solve_assignment(iou_distance(gboxes, hboxes), gate);
            for (const auto& [r, c] : res.matches) {
                pairs.emplace_back(gids[static_cast<size_t>(r)],
                                   hids[static_cast<size_t>(c)]);
                free_gt.erase(gids[static_cast<size_t>(r)]);
                free_hyp.erase(hids[static_cast<size_t>(c)]);
            }
        }

        for (const auto& [gid, hid] : pairs) {
            const auto prev = last_hyp.find(gid);
            if (prev != last_hyp.end() && prev->second != hid) {
                ++rep.id_switches;
            }
            last_hyp[gid] = hid;
            ++gt_covered[gid];
        }
        rep.fn += static_cast<long>(free_gt.size());
        rep.fp += static_cast<long>(free_hyp.size());
    }

    for (const auto& [gid, lifetime] : gt_lifetime) {
        const double ratio =
            static_cast<double>(gt_covered[gid]) / static_cast<double>(lifetime);
        if (ratio >= 0.8) ++rep.mt;
        if (ratio <= 0.2) ++rep.ml;
    }
    rep.mota = rep.gt_count > 0
                   ? 1.0 - static_cast<double>(rep.fn + rep.fp + rep.id_switches) /
                               static_cast<double>(rep.gt_count)
                   : 1.0;
    return rep;
}

double idf1(const MotDataset& gt, const MotDataset& hyp,
            double iou_match_thresh) {
    const auto gt_frames = frame_maps(gt);
    const auto hyp_frames = frame_maps(hyp);

    std::map<int, long> gt_len, hyp_len;
    std::map<std::pair<int, int>, long> overlap;
    for (const auto& [f, gmap] : gt_frames) {
        const auto hit = hyp_frames.find(f);
        for (const auto& [gid, gbox] : gmap) {
            ++gt_len[gid];
            if (hit == hyp_frames.end()) continue;
            for (const auto& [hid, hbox] : hit->second) {
                if (iou(gbox, hbox) >= iou_match_thresh) {
                    ++overlap[{gid, hid}];
                }
            }
        }
    }
    for (const auto& [f, hmap] : hyp_frames) {
        for (const auto& [hid, _] : hmap) ++hyp_len[hid];
    }

    long total_gt = 0, total_hyp = 0;
    for (const auto& [_, n] : gt_len) total_gt += n;
    for (const auto& [_, n] : hyp_len) total_hyp += n;
    if (total_gt + total_hyp == 0) return 1.0;
    if (overlap.empty()) return 0.0;

    std::vector<int> gids, hids;
    for (const auto& [gid, _] : gt_len) gids.push_back(gid);
    for (const auto& [hid, _] : hyp_len) hids.push_back(hid);

    // max-total-overlap trajectory pairing: all pairs feasible, so the
    // cardinality is fixed and minimizing the negated overlaps maximizes IDTP
    Eigen::MatrixXd cost(gids.size(), hids.size());
    for (size_t i = 0; i < gids.size(); ++i) {
        for (size_t j = 0; j < hids.size(); ++j) {
            const auto it = overlap.find({gids[i], hids[j]});
            cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                it == overlap.end() ? 0.0 : -static_cast<double>(it->second);
        }
    }
    const AssignmentResult res =
        solve_assignment(cost, std::numeric_limits<double>::infinity());
    long idtp = 0;
    for (const auto& [r, c] : res.matches) {
        const auto it = overlap.find({gids[static_cast<size_t>(r)],
                                      hids[static_cast<size_t>(c)]});
        if (it != overlap.end()) idtp += it->second;
    }
    // IDFP + IDFN = (total_hyp - idtp) + (total_gt - idtp)
    return 2.0 * static_cast<double>(idtp) /
           static_cast<double>(total_gt + total_hyp);
}

TrackingReport evaluate_tracking(const MotDataset& gt, const MotDataset& hyp,
                                 double iou_match_thresh) {
    TrackingReport rep = clear_mot(gt, hyp, iou_match_thresh);
    rep.idf1 = idf1(gt, hyp, iou_match_thresh);
    return rep;
}

std::pair<double, double> displacement(const ForecastHorizon& pred,
                                       const std::vector<BoundingBox>& gt_future,
                                       int valid_len) {
    if (valid_len < 1) {
        throw std::invalid_argument("displacement: valid_len must be >= 1");
    }
    if (static_cast<int>(pred.boxes.size()) < valid_len ||
        static_cast<int>(gt_future.size()) < valid_len) {
        throw std::invalid_argument("displacement: fewer boxes than valid_len");
    }
    double sum = 0.0, last = 0.0;
    for (int t = 0; t < valid_len; ++t) {
        last = std::hypot(pred.boxes[t].x - gt_future[t].x,
                          pred.boxes[t].y - gt_future[t].y);
        sum += last;
    }
    return {sum / valid_len, last};
}

std::pair<double, double> overlap_scores(const ForecastHorizon& pred,
                                         const std::vector<BoundingBox>& gt_future,
                                         int valid_len) {
    if (valid_len < 1) {
        throw std::invalid_argument("overlap_scores: valid_len must be >= 1");
    }
    if (static_cast<int>(pred.boxes.size()) < valid_len ||
        static_cast<int>(gt_future.size()) < valid_len) {
        throw std::invalid_argument("overlap_scores: fewer boxes than valid_len");
    }
    double sum = 0.0, last = 0.0;
    for (int t = 0; t < valid_len; ++t) {
        last = iou(pred.boxes[t], gt_future[t]);
        sum += last;
    }
    return {sum / valid_len, last};
}

ForecastReport aggregate_forecast(const std::vector<ForecastSample>& samples,
                                  int horizon) {
    if (samples.empty()) {
        throw std::invalid_argument("aggregate_forecast: zero samples");
    }
    ForecastReport rep;
    rep.horizon = horizon;
    rep.sample_count = static_cast<long>(samples.size());
    double wsum = 0.0;
    for (const auto& s : samples) {
        rep.ade += s.weight * s.ade;
        rep.fde += s.weight * s.fde;
        rep.aiou += s.weight * s.aiou;
        rep.fiou += s.weight * s.fiou;
        wsum += s.weight;
    }
    if (wsum <= 0.0) {
        throw std::invalid_argument("aggregate_forecast: non-positive total weight");
    }
    rep.ade /= wsum;
    rep.fde /= wsum;
    rep.aiou /= wsum;
    rep.fiou /= wsum;
    return rep;
}

ForecastReport forecast_eval(
    const MotDataset& gt,
    const std::function<std::unique_ptr<MotionPredictor>()>& make_predictor,
    const ForecastEvalOptions& options,
    const std::optional<Eigen::VectorXd>& context) {
    std::vector<ForecastSample> samples;
    const auto tracks = gt.by_track();
    for (const auto& [id, indices] : tracks) {
        // contiguous runs only
        size_t run_start = 0;
        while (run_start < indices.size()) {
            size_t run_end = run_start + 1;
            while (run_end < indices.size() &&
                   gt.records[indices[run_end]].frame ==
                       gt.records[indices[run_end - 1]].frame + 1) {
                ++run_end;
            }
            const int run_len = static_cast<int>(run_end - run_start);
            std::vector<BoundingBox> boxes(run_len);
            for (int i = 0; i < run_len; ++i) {
                boxes[i] = gt.records[indices[run_start + i]].box;
            }

            auto predictor = make_predictor();
            if (context) predictor->set_context(*context);
            int observed = 0;
            for (int a = 0; a < run_len; ++a) {
                if (a >= 2 && (a - 2) % options.stride == 0) {
                    const int avail = run_len - a;
                    const int qv = std::min(options.q, avail);
                    const bool usable = options.strict ? avail >= options.q : qv >= 1;
                    if (usable && predictor->ready()) {
                        const ForecastHorizon h = predictor->predict(options.q);
                        const std::vector<BoundingBox> future(
                            boxes.begin() + a, boxes.begin() + a + qv);
                        ForecastSample s;
                        std::tie(s.ade, s.fde) = displacement(h, future, qv);
                        std::tie(s.aiou, s.fiou) = overlap_scores(h, future, qv);
                        s.weight = options.strict ? 1.0 : static_cast<double>(qv);
                        samples.push_back(s);
                    }
                }
                predictor->observe(boxes[a]);
                ++observed;
            }
            (void)observed;
            run_start = run_end;
        }
    }
    return aggregate_forecast(samples, options.q);
}

}  // namespace trackcast

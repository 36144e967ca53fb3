#include "trackcast/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace trackcast {

void FrameObservations::validate() const {
    const size_t n = detections.size();
    if (confidences.size() != n || embeddings.size() != n) {
        throw std::invalid_argument(
            "FrameObservations: parallel sequences have unequal lengths");
    }
    if (!embeddings.empty()) {
        const auto dim = embeddings.front().size();
        for (const auto& e : embeddings) {
            if (e.size() != dim) {
                throw std::invalid_argument(
                    "FrameObservations: embeddings have mixed dimensions");
            }
        }
    }
}

void normalize_embeddings(std::vector<Eigen::VectorXd>& embeddings) {
    for (auto& e : embeddings) {
        const double n = e.norm();
        if (n <= 0.0 || !std::isfinite(n)) {
            throw std::invalid_argument("normalize_embeddings: zero or non-finite vector");
        }
        e /= n;
    }
}

double iou(const BoundingBox& a, const BoundingBox& b) {
    if (!a.valid() || !b.valid()) return 0.0;
    const double il = std::max(a.left(), b.left());
    const double it = std::max(a.top(), b.top());
    const double ir = std::min(a.right(), b.right());
    const double ib = std::min(a.bottom(), b.bottom());
    const double iw = ir - il;
    const double ih = ib - it;
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    const double uni = a.area() + b.area() - inter;
    return inter / uni;
}

Eigen::MatrixXd iou_distance(const std::vector<BoundingBox>& rows,
                             const std::vector<BoundingBox>& cols) {
    Eigen::MatrixXd d(rows.size(), cols.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        for (size_t j = 0; j < cols.size(); ++j) {
            d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                1.0 - iou(rows[i], cols[j]);
        }
    }
    return d;
}

Eigen::MatrixXd cosine_distance(const std::vector<Eigen::VectorXd>& rows,
                                const std::vector<Eigen::VectorXd>& cols) {
    Eigen::Index dim = -1;
    for (const auto* side : {&rows, &cols}) {
        for (const auto& v : *side) {
            if (dim < 0) dim = v.size();
            if (v.size() != dim) {
                throw std::invalid_argument("cosine_distance: dimension mismatch");
            }
            if (v.norm() <= 0.0) {
                throw std::invalid_argument("cosine_distance: zero vector");
            }
        }
    }
    Eigen::MatrixXd d(rows.size(), cols.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        for (size_t j = 0; j < cols.size(); ++j) {
            const double sim =
                rows[i].dot(cols[j]) / (rows[i].norm() * cols[j].norm());
            d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                std::clamp(1.0 - sim, 0.0, 2.0);
        }
    }
    return d;
}

std::vector<Velocity> velocities_from_boxes(const std::vector<BoundingBox>& boxes) {
    std::vector<Velocity> out;
    out.reserve(boxes.size());
    for (size_t j = 0; j < boxes.size(); ++j) {
        if (j == 0) {
            out.push_back(Velocity{});
        } else {
            out.push_back({boxes[j].x - boxes[j - 1].x, boxes[j].y - boxes[j - 1].y,
                           boxes[j].w - boxes[j - 1].w, boxes[j].h - boxes[j - 1].h});
        }
    }
    return out;
}

double center_distance_normalized(const BoundingBox& box, double frame_w,
                                  double frame_h) {
    const double cx = frame_w / 2.0;
    const double cy = frame_h / 2.0;
    const double dist = std::hypot(box.x - cx, box.y - cy);
    const double half_diag = std::hypot(cx, cy);
    if (half_diag <= 0.0) return 0.0;
    return std::clamp(dist / half_diag, 0.0, 1.0);
}

}  // namespace trackcast

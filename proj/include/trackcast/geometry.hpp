#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace trackcast {

// Floor applied to forecast widths/heights so extrapolated boxes stay valid.
inline constexpr double kMinBoxSize = 1e-6;

// Axis-aligned box in centroid form: (x, y) is the center, all units pixels.
// The zero box (0,0,0,0) is reserved as a padding sentinel and never overlaps
// anything.
struct BoundingBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    double left() const { return x - w / 2.0; }
    double top() const { return y - h / 2.0; }
    double right() const { return x + w / 2.0; }
    double bottom() const { return y + h / 2.0; }
    double area() const { return w * h; }
    bool valid() const { return w > 0.0 && h > 0.0; }

    static BoundingBox from_top_left(double bb_left, double bb_top,
                                     double bb_w, double bb_h) {
        return {bb_left + bb_w / 2.0, bb_top + bb_h / 2.0, bb_w, bb_h};
    }

    bool operator==(const BoundingBox&) const = default;
};

// Per-frame change of a box, components in pixels/frame.
struct Velocity {
    double dx = 0.0;
    double dy = 0.0;
    double dw = 0.0;
    double dh = 0.0;

    bool operator==(const Velocity&) const = default;
};

struct BoxWithVelocity {
    BoundingBox box;
    Velocity vel;

    bool operator==(const BoxWithVelocity&) const = default;
};

// Detections of one frame plus their confidences and appearance embeddings.
// All parallel sequences must have equal length; embeddings are expected to
// be unit L2 norm (normalize_embeddings takes care of ingestion).
struct FrameObservations {
    int frame_index = 0;
    std::vector<BoundingBox> detections;
    std::vector<double> confidences;
    std::vector<Eigen::VectorXd> embeddings;
    std::optional<Eigen::VectorXd> context;

    // Throws std::invalid_argument when the parallel sequences disagree.
    void validate() const;
};

// Normalizes each vector to unit L2 norm; zero vectors are rejected.
void normalize_embeddings(std::vector<Eigen::VectorXd>& embeddings);

// Intersection over union. Degenerate boxes (w <= 0 or h <= 0) yield 0 so
// padding sentinels never match anything.
double iou(const BoundingBox& a, const BoundingBox& b);

// Matrix of 1 - iou, shape |rows| x |cols|. Empty inputs give an empty matrix.
Eigen::MatrixXd iou_distance(const std::vector<BoundingBox>& rows,
                             const std::vector<BoundingBox>& cols);

// Matrix of 1 - cosine similarity, clamped to [0, 2]. Throws on dimension
// mismatch or zero vectors.
Eigen::MatrixXd cosine_distance(const std::vector<Eigen::VectorXd>& rows,
                                const std::vector<Eigen::VectorXd>& cols);

// Field-wise difference of consecutive boxes; the first entry has no
// predecessor and gets the zero velocity.
std::vector<Velocity> velocities_from_boxes(const std::vector<BoundingBox>& boxes);

// Euclidean distance from the box centroid to the frame center, normalized by
// half the frame diagonal and clamped to [0, 1].
double center_distance_normalized(const BoundingBox& box, double frame_w,
                                  double frame_h);

}  // namespace trackcast

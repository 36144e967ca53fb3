#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "trackcast/geometry.hpp"
#include "trackcast/gru.hpp"
#include "trackcast/motion.hpp"

namespace trackcast {

struct ForecasterConfig {
    int p = 10;            // past window length
    int q = 60;            // future horizon
    int hidden = 256;      // encoder/decoder hidden width
    int embed_dim = 256;   // context embedding width
    int concat_dim = 512;  // fused width, two equal projections
    // Fixed input conditioning: center_past subtracts the last observed
    // centroid from the positions, input_scale divides all eight components.
    // Decoder heads invert the transform, so every public surface stays in
    // raw pixels. Defaults are the identity.
    double input_scale = 1.0;
    bool center_past = false;

    int proj_dim() const { return concat_dim / 2; }
    void validate() const;  // throws std::invalid_argument on bad values

    bool operator==(const ForecasterConfig&) const = default;
};

// All learnable weights of the forecasting branch plus the uncertainty-loss
// weights. The three recurrent blocks share the cell equations in gru.hpp.
struct ForecasterParams {
    ForecasterConfig config;
    GruParams past_encoder;    // input 8 -> hidden
    LinearParams enc_fc;       // hidden -> proj, relu
    LinearParams embed_fc;     // embed_dim -> proj, relu
    GruParams past_decoder;    // proj -> hidden
    LinearParams past_out;     // hidden -> 8
    LinearParams fuse_fc;      // concat -> concat, relu
    GruParams future_decoder;  // concat -> hidden
    LinearParams future_out;   // hidden -> 4
    double s_det = 0.0;
    double s_id = 0.0;
    double s_for = 0.0;
};

ForecasterParams forecaster_init(const ForecasterConfig& config,
                                 std::uint64_t seed);

// Fixed-width past window, zero-padded at the front; only the trailing
// valid_len entries are real observations.
struct PastSequence {
    std::vector<BoxWithVelocity> steps;
    int valid_len = 0;

    int window() const { return static_cast<int>(steps.size()); }

    // Builds the window from up to p most recent boxes (velocities per
    // consecutive difference, first one zero).
    static PastSequence from_boxes(const std::vector<BoundingBox>& boxes, int p);
    // Same, but velocities are already known (e.g. track history rings).
    static PastSequence from_history(const std::vector<BoxWithVelocity>& history,
                                     int p);
};

struct TrainingSample {
    PastSequence past;
    std::vector<BoundingBox> future_boxes;  // at most q
    int future_valid_len = 0;
    BoundingBox last_box;     // final valid past box
    Eigen::VectorXd context;  // embed_dim wide
};

// 8-vector layout shared by encoder input and past-decoder output:
// (x, y, w, h, dx, dy, dw, dh).
Eigen::Matrix<double, 8, 1> to_vec8(const BoxWithVelocity& s);
BoxWithVelocity from_vec8(const Eigen::Matrix<double, 8, 1>& v);

// Applies the configured input conditioning relative to an anchor box.
Eigen::Matrix<double, 8, 1> conditioned_input(const BoxWithVelocity& step,
                                              const BoundingBox& anchor,
                                              const ForecasterConfig& cfg);

struct EncodeResult {
    Eigen::VectorXd h_final;  // hidden
    Eigen::VectorXd phi_b;    // proj, non-negative
};

// GRU over the valid steps from a zero initial hidden state, then the
// rectified projection. Throws when valid_len < 2 (not ready). Padding steps
// are skipped so extra padding never changes the result.
EncodeResult encode_past(const PastSequence& past, const ForecasterParams& params);

// Rectified affine projection of the context vector; throws on width mismatch.
Eigen::VectorXd encode_embedding(const Eigen::VectorXd& context,
                                 const ForecasterParams& params);

// Reconstruction decoder: p steps seeded with h_final, fed phi_b each step.
// anchor is the box the inputs were centered on (ignored under the identity
// conditioning).
std::vector<BoxWithVelocity> decode_past(const Eigen::VectorXd& h_final,
                                         const Eigen::VectorXd& phi_b,
                                         const ForecasterParams& params,
                                         const BoundingBox& anchor = {});

// Future velocities: q steps seeded with h_final, fed the rectified
// projection of concat(phi_b, phi_e) each step. Outputs are raw pixel
// velocities.
std::vector<Velocity> decode_future(const Eigen::VectorXd& h_final,
                                    const Eigen::VectorXd& phi_b,
                                    const Eigen::VectorXd& phi_e,
                                    const ForecasterParams& params, int q);

// corrected: box_i = last_box + cumsum_i
// literal:   box_i = last_box + i * cumsum_i   (1-based i)
enum class ConcatMode { corrected, literal };

// Turns per-step velocities into future boxes by cumulative summation
// anchored at the last observed box; widths/heights floored at kMinBoxSize.
ForecastHorizon trajectory_concat(const BoundingBox& last_box,
                                  const std::vector<Velocity>& velocities,
                                  ConcatMode mode = ConcatMode::corrected);

// Masked L1 of Eq.-8 shape for one track: the first valid_len decoded steps
// against the valid_len real past steps, normalized by 8 * valid_len.
double loss_past(const PastSequence& truth,
                 const std::vector<BoxWithVelocity>& pred);

// Masked L1 over the first valid_len future boxes, normalized by 4 * valid_len.
double loss_future(const std::vector<BoundingBox>& truth_boxes,
                   const ForecastHorizon& pred, int valid_len);

inline double forecast_loss(double l_past, double l_future) {
    return l_past + l_future;
}

// 0.5 * (sum_i exp(-s_i) * L_i + sum_i s_i), generic over the task count.
double uncertainty_loss(const std::vector<double>& losses,
                        const std::vector<double>& weights);

// Full inference path: encode, embed, decode future, concatenate.
ForecastHorizon forecast(const PastSequence& history,
                         const Eigen::VectorXd& context,
                         const ForecasterParams& params, int q,
                         ConcatMode mode = ConcatMode::corrected);

// Versioned JSON checkpoint with shape headers; loading validates every
// tensor shape against the embedded config.
void save_params(const ForecasterParams& params, const std::string& path);
ForecasterParams load_params(const std::string& path);

// Tracker-facing adapter around the trained model. Context defaults to zero
// until set_context is called.
class LearnedPredictor final : public MotionPredictor {
public:
    explicit LearnedPredictor(std::shared_ptr<const ForecasterParams> params,
                              ConcatMode mode = ConcatMode::corrected);

    void observe(const BoundingBox& box, int steps_since_last = 1) override;
    bool ready() const override { return count_ >= 2; }
    ForecastHorizon predict(int q) const override;
    void reset() override;
    void set_context(const Eigen::VectorXd& context) override;

private:
    std::shared_ptr<const ForecasterParams> params_;
    ConcatMode mode_;
    std::deque<BoxWithVelocity> history_;
    Eigen::VectorXd context_;
    int count_ = 0;
};

}  // namespace trackcast

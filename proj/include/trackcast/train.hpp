#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trackcast/forecaster.hpp"

namespace trackcast {

struct TrainConfig {
    int epochs = 30;
    int batch_size = 8;
    double lr = 1e-4;
    double lr_after_decay = 1e-5;
    int decay_epoch = 20;  // epochs at or past this index use lr_after_decay
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double s_init = 0.0;  // uncertainty weights start here, within [-2, 5]
    ConcatMode concat_mode = ConcatMode::corrected;
    std::uint64_t seed = 1;
    // sliding-window extraction controls used by the dataset builder
    int window_stride = 1;
    long max_windows = 0;  // 0 = no cap; otherwise a seeded subsample

    void validate() const;
};

struct ForecasterGrads {
    GruGrads past_encoder;
    LinearGrads enc_fc;
    LinearGrads embed_fc;
    GruGrads past_decoder;
    LinearGrads past_out;
    LinearGrads fuse_fc;
    GruGrads future_decoder;
    LinearGrads future_out;
    double s_for = 0.0;

    explicit ForecasterGrads(const ForecasterParams& p);
    void set_zero();
};

// Batch loss: masked past/future L1 normalized by the batch-wide valid counts,
// combined through the uncertainty weighting of the live forecast task.
// When grads is non-null the full reverse pass runs and accumulates into it.
double training_loss(const std::vector<TrainingSample>& batch,
                     const ForecasterParams& params, ConcatMode mode,
                     ForecasterGrads* grads = nullptr,
                     double* l_past_out = nullptr,
                     double* l_future_out = nullptr);

// Flattened view of one trainable tensor. Views into params and grads come
// back in the same fixed order so optimizers can walk them in lockstep.
struct TensorView {
    std::string name;
    double* data;
    std::size_t size;
};

std::vector<TensorView> tensor_views(ForecasterParams& params);
std::vector<TensorView> tensor_views(ForecasterGrads& grads);

struct EpochRecord {
    int epoch;
    double loss;
    double lr;
};

struct TrainResult {
    ForecasterParams params;
    std::vector<EpochRecord> log;
};

// Adam over training_loss with the configured schedule. Deterministic for a
// fixed seed and dataset. Throws on an empty dataset or a non-finite loss.
TrainResult train_forecaster(const std::vector<TrainingSample>& samples,
                             const ForecasterConfig& config,
                             const TrainConfig& tc);

// Sliding-window sample extraction from per-frame box tracks. Tracks are
// (id -> ordered (frame, box)) with gaps allowed between detections; windows
// only span consecutive frames. Context comes from the per-frame provider
// (zero vectors when absent).
struct TrackedSequence {
    std::vector<int> frames;  // strictly increasing
    std::vector<BoundingBox> boxes;
};

std::vector<TrainingSample> build_training_samples(
    const std::vector<TrackedSequence>& tracks, const ForecasterConfig& config,
    const std::vector<Eigen::VectorXd>* frame_context = nullptr,
    int first_frame = 1, int stride = 1);

void write_training_log(const std::vector<EpochRecord>& log,
                        const std::string& path);

}  // namespace trackcast

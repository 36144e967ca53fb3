#pragma once

#include <memory>
#include <vector>

#include "trackcast/geometry.hpp"
#include "trackcast/kalman.hpp"

namespace trackcast {

// q future boxes for one track; entry 0 predicts origin_frame.
struct ForecastHorizon {
    std::vector<BoundingBox> boxes;
    int origin_frame = 0;
};

// Shared predictor contract. Predicting needs at least two prior observations;
// predict(q) always returns exactly q boxes once ready.
class MotionPredictor {
public:
    virtual ~MotionPredictor() = default;

    // steps_since_last covers re-observations after lost frames; predictors
    // without internal clocks may ignore it.
    virtual void observe(const BoundingBox& box, int steps_since_last = 1) = 0;
    virtual bool ready() const = 0;
    virtual ForecastHorizon predict(int q) const = 0;
    virtual void reset() = 0;

    // Per-frame context hook used by the learned predictor; no-op elsewhere.
    virtual void set_context(const Eigen::VectorXd&) {}
};

// Linear extrapolation from the last two boxes.
ForecastHorizon cv_predict(const std::vector<BoundingBox>& history, int q);

class ConstantVelocityPredictor final : public MotionPredictor {
public:
    void observe(const BoundingBox& box, int steps_since_last = 1) override;
    bool ready() const override { return count_ >= 2; }
    ForecastHorizon predict(int q) const override;
    void reset() override;

private:
    BoundingBox prev_;
    BoundingBox last_;
    int count_ = 0;
};

class KalmanBoxPredictor final : public MotionPredictor {
public:
    explicit KalmanBoxPredictor(KalmanNoise noise = {}) : noise_(noise) {}

    void observe(const BoundingBox& box, int steps_since_last = 1) override;
    bool ready() const override { return count_ >= 2; }
    ForecastHorizon predict(int q) const override;
    void reset() override;

    const KalmanState& state() const { return state_; }

private:
    KalmanNoise noise_;
    KalmanState state_;
    int count_ = 0;
};

// q successive transition steps from a state copy, means read out as boxes.
ForecastHorizon kalman_forecast(const KalmanState& state, int q,
                                const KalmanNoise& noise = {});

}  // namespace trackcast

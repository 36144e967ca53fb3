#include "trackcast/motion.hpp"

#include <algorithm>
#include <stdexcept>

namespace trackcast {

ForecastHorizon cv_predict(const std::vector<BoundingBox>& history, int q) {
    if (history.size() < 2) {
        throw std::invalid_argument("cv_predict: needs at least two previous locations");
    }
    if (q < 1) {
        throw std::invalid_argument("cv_predict: q must be positive");
    }
    const BoundingBox& last = history.back();
    const BoundingBox& prev = history[history.size() - 2];
    const Velocity v{last.x - prev.x, last.y - prev.y, last.w - prev.w,
                     last.h - prev.h};

    ForecastHorizon out;
    out.boxes.reserve(q);
    // Accumulate the velocity sum rather than multiplying by the step index;
    // the cumulative-sum forecast path does the same, so constant-velocity
    // inputs agree bit for bit across both.
    Velocity sum{};
    for (int i = 0; i < q; ++i) {
        sum.dx += v.dx;
        sum.dy += v.dy;
        sum.dw += v.dw;
        sum.dh += v.dh;
        out.boxes.push_back({last.x + sum.dx, last.y + sum.dy,
                             std::max(last.w + sum.dw, kMinBoxSize),
                             std::max(last.h + sum.dh, kMinBoxSize)});
    }
    return out;
}

void ConstantVelocityPredictor::observe(const BoundingBox& box, int) {
    prev_ = last_;
    last_ = box;
    ++count_;
}

ForecastHorizon ConstantVelocityPredictor::predict(int q) const {
    if (!ready()) {
        throw std::logic_error("ConstantVelocityPredictor: not ready (needs two observations)");
    }
    return cv_predict({prev_, last_}, q);
}

void ConstantVelocityPredictor::reset() {
    prev_ = {};
    last_ = {};
    count_ = 0;
}

void KalmanBoxPredictor::observe(const BoundingBox& box, int steps_since_last) {
    if (count_ == 0) {
        state_ = kalman_init(box, noise_);
    } else {
        for (int i = 0; i < std::max(steps_since_last, 1); ++i) {
            state_ = kalman_predict(state_, noise_);
        }
        state_ = kalman_update(state_, box, noise_);
    }
    ++count_;
}

ForecastHorizon KalmanBoxPredictor::predict(int q) const {
    if (!ready()) {
        throw std::logic_error("KalmanBoxPredictor: not ready (needs two observations)");
    }
    return kalman_forecast(state_, q, noise_);
}

void KalmanBoxPredictor::reset() {
    state_ = {};
    count_ = 0;
}

ForecastHorizon kalman_forecast(const KalmanState& state, int q,
                                const KalmanNoise& noise) {
    if (q < 1) {
        throw std::invalid_argument("kalman_forecast: q must be positive");
    }
    ForecastHorizon out;
    out.boxes.reserve(q);
    KalmanState s = state;
    for (int i = 0; i < q; ++i) {
        s = kalman_predict(s, noise);
        out.boxes.push_back(kalman_box(s));
    }
    return out;
}

}  // namespace trackcast

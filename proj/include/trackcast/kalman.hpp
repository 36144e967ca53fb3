#pragma once

#include <Eigen/Dense>

#include "trackcast/geometry.hpp"

namespace trackcast {

// Constant-velocity Kalman model over the 8-state (x, y, w, h, dx, dy, dw, dh).
// Noise magnitudes scale with the current box height so behavior is
// scale-invariant; all of them are configurable.
struct KalmanNoise {
    double pos_std_factor = 1.0 / 20.0;   // position process noise, times h
    double size_std_factor = 1.0 / 20.0;  // size process noise, times h
    double vel_std_factor = 1.0 / 160.0;  // velocity process noise, times h
    double meas_std_factor = 1.0 / 20.0;  // measurement noise, times h
    double init_pos_factor = 2.0;         // initial pos/size std multiplier
    double init_vel_factor = 10.0;        // initial velocity std multiplier
};

struct KalmanState {
    Eigen::Matrix<double, 8, 1> mean;
    Eigen::Matrix<double, 8, 8> cov;
};

KalmanState kalman_init(const BoundingBox& box, const KalmanNoise& noise = {});
KalmanState kalman_predict(const KalmanState& state, const KalmanNoise& noise = {});
// Standard gain/innovation correction in Joseph form; throws on a singular
// innovation covariance.
KalmanState kalman_update(const KalmanState& state, const BoundingBox& obs,
                          const KalmanNoise& noise = {});

BoundingBox kalman_box(const KalmanState& state);

}  // namespace trackcast

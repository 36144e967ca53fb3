#include "trackcast/kalman.hpp"

#include <cmath>
#include <stdexcept>

namespace trackcast {

namespace {

Eigen::Matrix<double, 8, 8> transition() {
    Eigen::Matrix<double, 8, 8> f = Eigen::Matrix<double, 8, 8>::Identity();
    for (int i = 0; i < 4; ++i) f(i, 4 + i) = 1.0;
    return f;
}

double height_scale(const KalmanState& s) {
    return std::max(std::abs(s.mean(3)), kMinBoxSize);
}

Eigen::Matrix<double, 8, 8> process_noise(const KalmanState& s,
                                          const KalmanNoise& noise) {
    const double h = height_scale(s);
    Eigen::Matrix<double, 8, 1> std;
    std << noise.pos_std_factor * h, noise.pos_std_factor * h,
        noise.size_std_factor * h, noise.size_std_factor * h,
        noise.vel_std_factor * h, noise.vel_std_factor * h,
        noise.vel_std_factor * h, noise.vel_std_factor * h;
    return std.array().square().matrix().asDiagonal();
}

void symmetrize(Eigen::Matrix<double, 8, 8>& p) {
    p = ((p + p.transpose()) / 2.0).eval();
}

}  // namespace

KalmanState kalman_init(const BoundingBox& box, const KalmanNoise& noise) {
    KalmanState s;
    s.mean << box.x, box.y, box.w, box.h, 0.0, 0.0, 0.0, 0.0;
    const double h = std::max(std::abs(box.h), kMinBoxSize);
    Eigen::Matrix<double, 8, 1> std;
    const double p = noise.init_pos_factor * noise.pos_std_factor * h;
    const double v = noise.init_vel_factor * noise.vel_std_factor * h;
    std << p, p, p, p, v, v, v, v;
    s.cov = std.array().square().matrix().asDiagonal();
    return s;
}

KalmanState kalman_predict(const KalmanState& state, const KalmanNoise& noise) {
    static const Eigen::Matrix<double, 8, 8> f = transition();
    KalmanState s;
    s.mean = f * state.mean;
    s.cov = f * state.cov * f.transpose() + process_noise(state, noise);
    symmetrize(s.cov);
    return s;
}

KalmanState kalman_update(const KalmanState& state, const BoundingBox& obs,
                          const KalmanNoise& noise) {
    Eigen::Matrix<double, 4, 8> h = Eigen::Matrix<double, 4, 8>::Zero();
    for (int i = 0; i < 4; ++i) h(i, i) = 1.0;

    const double hs = height_scale(state);
    const double m = noise.meas_std_factor * hs;
    const Eigen::Matrix<double, 4, 4> r =
        (Eigen::Matrix<double, 4, 1>::Constant(m).array().square())
            .matrix()
            .asDiagonal();

    const Eigen::Matrix<double, 4, 4> innov_cov =
        h * state.cov * h.transpose() + r;
    Eigen::FullPivLU<Eigen::Matrix<double, 4, 4>> lu(innov_cov);
    if (!lu.isInvertible()) {
        throw std::runtime_error(
            "kalman_update: singular innovation covariance (degenerate noise)");
    }
    const Eigen::Matrix<double, 8, 4> gain =
        state.cov * h.transpose() * lu.inverse();

    Eigen::Matrix<double, 4, 1> z;
    z << obs.x, obs.y, obs.w, obs.h;

    KalmanState s;
    s.mean = state.mean + gain * (z - h * state.mean);
    const Eigen::Matrix<double, 8, 8> ikh =
        Eigen::Matrix<double, 8, 8>::Identity() - gain * h;
    s.cov = ikh * state.cov * ikh.transpose() + gain * r * gain.transpose();
    symmetrize(s.cov);
    return s;
}

BoundingBox kalman_box(const KalmanState& state) {
    return {state.mean(0), state.mean(1),
            std::max(state.mean(2), kMinBoxSize),
            std::max(state.mean(3), kMinBoxSize)};
}

}  // namespace trackcast

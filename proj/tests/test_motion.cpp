#include <doctest.h>

#include <Eigen/Cholesky>

#include "trackcast/motion.hpp"
#include "trackcast/rng.hpp"

using namespace trackcast;

namespace {

// near-zero process noise with a wide prior: the filter reduces to least
// squares over the history, which is exact on model-consistent data
KalmanNoise ls_limit_noise() {
    KalmanNoise n;
    n.pos_std_factor = 1e-12;
    n.size_std_factor = 1e-12;
    n.vel_std_factor = 1e-12;
    n.meas_std_factor = 1.0 / 200.0;
    n.init_pos_factor = 4e12;  // prior std ~ 4h despite the tiny process factor
    n.init_vel_factor = 4e13;
    return n;
}

// near-zero measurement noise: updates pin the observed components
KalmanNoise trusting_noise() {
    KalmanNoise n;
    n.meas_std_factor = 1e-9;
    return n;
}

}  // namespace

TEST_SUITE("motion") {

TEST_CASE("cv_predict extrapolates the last two boxes") {
    const auto h = cv_predict({{0, 0, 2, 2}, {1, 0, 2, 2}}, 3);
    REQUIRE(h.boxes.size() == 3);
    CHECK(h.boxes[0] == BoundingBox{2, 0, 2, 2});
    CHECK(h.boxes[1] == BoundingBox{3, 0, 2, 2});
    CHECK(h.boxes[2] == BoundingBox{4, 0, 2, 2});

    const auto still = cv_predict({{5, 5, 3, 3}, {5, 5, 3, 3}}, 2);
    CHECK(still.boxes[0] == BoundingBox{5, 5, 3, 3});
    CHECK(still.boxes[1] == BoundingBox{5, 5, 3, 3});

    CHECK_THROWS_AS(cv_predict({{0, 0, 2, 2}}, 3), std::invalid_argument);
}

TEST_CASE("cv is exact on linear motion") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const Velocity v{rng.uniform(-3, 3), rng.uniform(-3, 3),
                         rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1)};
        const BoundingBox b0{rng.uniform(0, 100), rng.uniform(0, 100),
                             rng.uniform(5, 20), rng.uniform(5, 20)};
        std::vector<BoundingBox> track;
        for (int t = 0; t < 12; ++t) {
            track.push_back({b0.x + v.dx * t, b0.y + v.dy * t, b0.w + v.dw * t,
                             b0.h + v.dh * t});
        }
        const auto h = cv_predict({track[8], track[9]}, 2);
        CHECK(h.boxes[0].x == doctest::Approx(track[10].x).epsilon(1e-12));
        CHECK(h.boxes[1].y == doctest::Approx(track[11].y).epsilon(1e-12));
    }
}

TEST_CASE("kalman_init seeds zero velocity and diagonal covariance") {
    const auto s = kalman_init({10, 10, 4, 8});
    CHECK(s.mean(0) == 10);
    CHECK(s.mean(3) == 8);
    for (int i = 4; i < 8; ++i) CHECK(s.mean(i) == 0.0);
    for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 8; ++j) {
            if (i != j) CHECK(s.cov(i, j) == 0.0);
        }
    }
}

TEST_CASE("kalman_predict applies the constant-velocity transition") {
    KalmanState s = kalman_init({0, 0, 2, 2});
    s.mean(4) = 1.0;  // dx
    const auto next = kalman_predict(s);
    CHECK(next.mean(0) == doctest::Approx(1.0));
    CHECK(next.mean(1) == doctest::Approx(0.0));
    CHECK(next.mean(2) == doctest::Approx(2.0));
    CHECK(next.mean(4) == doctest::Approx(1.0));

    const auto still = kalman_predict(kalman_init({5, 6, 2, 3}));
    CHECK(still.mean(0) == doctest::Approx(5.0));
    CHECK(still.cov.trace() > kalman_init({5, 6, 2, 3}).cov.trace());
}

TEST_CASE("kalman_update pins observations under tiny measurement noise") {
    const auto noise = trusting_noise();
    KalmanState s = kalman_init({0, 0, 4, 4}, noise);
    s = kalman_predict(s, noise);
    const BoundingBox obs{0.5, -0.25, 4.1, 3.9};
    s = kalman_update(s, obs, noise);
    CHECK(s.mean(0) == doctest::Approx(obs.x).epsilon(1e-9));
    CHECK(s.mean(1) == doctest::Approx(obs.y).epsilon(1e-9));
    CHECK(s.mean(2) == doctest::Approx(obs.w).epsilon(1e-9));
    CHECK(s.mean(3) == doctest::Approx(obs.h).epsilon(1e-9));
}

TEST_CASE("kalman converges on a noise-free linear track") {
    const auto noise = ls_limit_noise();
    KalmanBoxPredictor kf(noise);
    const Velocity v{2.0, -1.0, 0.0, 0.0};
    for (int t = 0; t < 6; ++t) {
        kf.observe({10 + v.dx * t, 50 + v.dy * t, 6, 12});
    }
    // one-step prediction error after 5+ updates
    const auto h = kf.predict(1);
    CHECK(std::abs(h.boxes[0].x - (10 + v.dx * 6)) < 1e-6);
    CHECK(std::abs(h.boxes[0].y - (50 + v.dy * 6)) < 1e-6);

    const auto h10 = kf.predict(10);
    double ade = 0.0;
    for (int i = 0; i < 10; ++i) {
        const double tx = 10 + v.dx * (6 + i);
        const double ty = 50 + v.dy * (6 + i);
        ade += std::hypot(h10.boxes[i].x - tx, h10.boxes[i].y - ty);
    }
    CHECK(ade / 10 < 1e-3);
}

TEST_CASE("measured-block trace shrinks on update") {
    KalmanState s = kalman_init({0, 0, 4, 4});
    s = kalman_predict(s);
    const double before = s.cov.topLeftCorner(4, 4).trace();
    const auto after = kalman_update(s, {0.1, 0.1, 4.0, 4.0});
    CHECK(after.cov.topLeftCorner(4, 4).trace() < before);
}

TEST_CASE("kalman_forecast shapes and motion") {
    KalmanState s = kalman_init({3, 4, 2, 2});
    const auto still = kalman_forecast(s, 4);
    REQUIRE(still.boxes.size() == 4);
    for (const auto& b : still.boxes) {
        CHECK(b.x == doctest::Approx(3.0));
        CHECK(b.y == doctest::Approx(4.0));
    }
    s.mean(4) = 1.0;
    const auto moving = kalman_forecast(s, 3);
    CHECK(moving.boxes[0].x == doctest::Approx(4.0));
    CHECK(moving.boxes[1].x == doctest::Approx(5.0));
    CHECK(moving.boxes[2].x == doctest::Approx(6.0));
}

TEST_CASE("covariance stays symmetric positive definite under random cycling") {
    Rng rng(11);
    KalmanState s = kalman_init({100, 100, 10, 20});
    for (int i = 0; i < 2000; ++i) {
        s = kalman_predict(s);
        if (rng.uniform() < 0.7) {
            const BoundingBox obs{s.mean(0) + rng.gaussian(0, 2),
                                  s.mean(1) + rng.gaussian(0, 2),
                                  std::max(1.0, s.mean(2) + rng.gaussian(0, 0.5)),
                                  std::max(1.0, s.mean(3) + rng.gaussian(0, 0.5))};
            s = kalman_update(s, obs);
        }
        CHECK((s.cov - s.cov.transpose()).cwiseAbs().maxCoeff() < 1e-9);
        Eigen::LLT<Eigen::Matrix<double, 8, 8>> llt(s.cov);
        REQUIRE(llt.info() == Eigen::Success);
    }
}

TEST_CASE("predictor contract rejects early predictions") {
    ConstantVelocityPredictor cv;
    CHECK_FALSE(cv.ready());
    CHECK_THROWS_AS(cv.predict(3), std::logic_error);
    cv.observe({0, 0, 2, 2});
    CHECK_THROWS_AS(cv.predict(3), std::logic_error);
    cv.observe({1, 0, 2, 2});
    CHECK(cv.ready());
    CHECK(cv.predict(2).boxes.size() == 2);
    cv.reset();
    CHECK_FALSE(cv.ready());

    KalmanBoxPredictor kf;
    CHECK_THROWS_AS(kf.predict(3), std::logic_error);
    kf.observe({0, 0, 2, 2});
    CHECK_FALSE(kf.ready());
    kf.observe({1, 0, 2, 2});
    CHECK(kf.predict(5).boxes.size() == 5);
}

}  // TEST_SUITE

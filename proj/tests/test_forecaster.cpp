#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "trackcast/forecaster.hpp"
#include "trackcast/rng.hpp"

using namespace trackcast;

namespace {

ForecasterConfig small_config() {
    ForecasterConfig c;
    c.p = 4;
    c.q = 5;
    c.hidden = 8;
    c.embed_dim = 4;
    c.concat_dim = 16;
    return c;
}

PastSequence linear_past(int p, int valid, double step = 1.0) {
    std::vector<BoundingBox> boxes;
    for (int i = 0; i < valid; ++i) {
        boxes.push_back({10.0 + step * i, 20.0, 4.0, 8.0});
    }
    return PastSequence::from_boxes(boxes, p);
}

void zero_params(ForecasterParams& p) {
    p.past_encoder.w.setZero();
    p.past_encoder.u.setZero();
    p.past_encoder.b.setZero();
    p.enc_fc.w.setZero();
    p.enc_fc.b.setZero();
    p.embed_fc.w.setZero();
    p.embed_fc.b.setZero();
    p.past_decoder.w.setZero();
    p.past_decoder.u.setZero();
    p.past_decoder.b.setZero();
    p.past_out.w.setZero();
    p.past_out.b.setZero();
    p.fuse_fc.w.setZero();
    p.fuse_fc.b.setZero();
    p.future_decoder.w.setZero();
    p.future_decoder.u.setZero();
    p.future_decoder.b.setZero();
    p.future_out.w.setZero();
    p.future_out.b.setZero();
}

}  // namespace

TEST_SUITE("forecaster") {

TEST_CASE("encode_past with zero weights and shapes") {
    auto params = forecaster_init(small_config(), 1);
    zero_params(params);
    params.enc_fc.b << 1, -1, 2, -2, 0.5, 0, 3, -3;

    const auto enc = encode_past(linear_past(4, 4), params);
    CHECK(enc.h_final.size() == 8);
    CHECK(enc.phi_b.size() == 8);
    CHECK(enc.h_final.cwiseAbs().maxCoeff() == 0.0);
    // phi_b = relu(bias) once the hidden state is identically zero
    CHECK(enc.phi_b(0) == 1.0);
    CHECK(enc.phi_b(1) == 0.0);
    CHECK(enc.phi_b(6) == 3.0);
}

TEST_CASE("encode_past determinism and not-ready") {
    const auto params = forecaster_init(small_config(), 77);
    const auto a = encode_past(linear_past(4, 3), params);
    const auto b = encode_past(linear_past(4, 3), params);
    CHECK(a.h_final == b.h_final);
    CHECK(a.phi_b == b.phi_b);

    CHECK_THROWS_AS(encode_past(linear_past(4, 1), params), std::logic_error);
}

TEST_CASE("padding does not change the encoding") {
    const auto params = forecaster_init(small_config(), 5);
    const auto short_window = encode_past(linear_past(4, 3), params);

    ForecasterConfig wide = small_config();
    wide.p = 9;
    auto wide_params = params;
    wide_params.config = wide;
    const auto padded = encode_past(linear_past(9, 3), wide_params);
    CHECK((short_window.h_final - padded.h_final).cwiseAbs().maxCoeff() == 0.0);
    CHECK((short_window.phi_b - padded.phi_b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("encode_embedding") {
    auto params = forecaster_init(small_config(), 2);
    Eigen::VectorXd ctx = Eigen::VectorXd::Zero(4);

    auto zeroed = params;
    zero_params(zeroed);
    CHECK(encode_embedding(ctx, zeroed).cwiseAbs().maxCoeff() == 0.0);

    Rng rng(3);
    for (int i = 0; i < 20; ++i) {
        for (int k = 0; k < 4; ++k) ctx(k) = rng.gaussian();
        const auto phi = encode_embedding(ctx, params);
        CHECK(phi.size() == 8);
        CHECK(phi.minCoeff() >= 0.0);
    }
    CHECK_THROWS_AS(encode_embedding(Eigen::VectorXd::Zero(5), params),
                    std::invalid_argument);
}

TEST_CASE("decode_past shape and zero-weight degenerate") {
    auto params = forecaster_init(small_config(), 4);
    const auto enc = encode_past(linear_past(4, 4), params);
    const auto decoded = decode_past(enc.h_final, enc.phi_b, params);
    CHECK(decoded.size() == 4);

    zero_params(params);
    params.past_out.b << 1, 2, 3, 4, 5, 6, 7, 8;
    const auto flat = decode_past(Eigen::VectorXd::Zero(8),
                                  Eigen::VectorXd::Zero(8), params);
    for (const auto& s : flat) {
        CHECK(s.box.x == 1.0);
        CHECK(s.vel.dh == 8.0);
    }
}

TEST_CASE("decode_future shape, degenerate, and context sensitivity") {
    auto params = forecaster_init(small_config(), 6);
    const auto enc = encode_past(linear_past(4, 4), params);
    const Eigen::VectorXd ctx_a = Eigen::VectorXd::Unit(4, 0);
    const Eigen::VectorXd ctx_b = Eigen::VectorXd::Unit(4, 1);

    const auto va = decode_future(enc.h_final, enc.phi_b,
                                  encode_embedding(ctx_a, params), params, 5);
    CHECK(va.size() == 5);

    const auto vb = decode_future(enc.h_final, enc.phi_b,
                                  encode_embedding(ctx_b, params), params, 5);
    double diff = 0.0;
    for (size_t i = 0; i < va.size(); ++i) {
        diff += std::abs(va[i].dx - vb[i].dx) + std::abs(va[i].dy - vb[i].dy);
    }
    CHECK(diff > 0.0);  // context is not ignored

    auto zeroed = params;
    zero_params(zeroed);
    zeroed.future_out.b << 0.5, -0.5, 0.25, 0.0;
    const auto flat = decode_future(Eigen::VectorXd::Zero(8),
                                    Eigen::VectorXd::Zero(8),
                                    Eigen::VectorXd::Zero(8), zeroed, 3);
    for (const auto& v : flat) {
        CHECK(v.dx == 0.5);
        CHECK(v.dy == -0.5);
    }
}

TEST_CASE("trajectory_concat corrected and literal hand values") {
    const BoundingBox last{10, 10, 4, 8};
    const std::vector<Velocity> vels(3, Velocity{1, 0, 0, 0});

    const auto corrected = trajectory_concat(last, vels, ConcatMode::corrected);
    CHECK(corrected.boxes[0] == BoundingBox{11, 10, 4, 8});
    CHECK(corrected.boxes[1] == BoundingBox{12, 10, 4, 8});
    CHECK(corrected.boxes[2] == BoundingBox{13, 10, 4, 8});

    const auto literal = trajectory_concat(last, vels, ConcatMode::literal);
    CHECK(literal.boxes[0] == BoundingBox{11, 10, 4, 8});
    CHECK(literal.boxes[1] == BoundingBox{14, 10, 4, 8});
    CHECK(literal.boxes[2] == BoundingBox{19, 10, 4, 8});

    const std::vector<Velocity> zeros(4, Velocity{});
    for (const auto mode : {ConcatMode::corrected, ConcatMode::literal}) {
        for (const auto& b : trajectory_concat(last, zeros, mode).boxes) {
            CHECK(b == last);
        }
    }
}

TEST_CASE("corrected concat equals cv_predict on constant velocities") {
    Rng rng(123);
    for (int trial = 0; trial < 200; ++trial) {
        const BoundingBox last{rng.uniform(-100, 100), rng.uniform(-100, 100),
                               rng.uniform(1, 40), rng.uniform(1, 40)};
        const BoundingBox prev{last.x - rng.uniform(-5, 5),
                               last.y - rng.uniform(-5, 5),
                               std::max(0.5, last.w - rng.uniform(-1, 1)),
                               std::max(0.5, last.h - rng.uniform(-1, 1))};
        // the constant velocity both routes consume is the consecutive
        // difference of the same two boxes
        const Velocity v{last.x - prev.x, last.y - prev.y, last.w - prev.w,
                         last.h - prev.h};
        const int q = 1 + static_cast<int>(rng.uniform_int(12));
        const auto via_cv = cv_predict({prev, last}, q);
        const auto via_concat = trajectory_concat(
            last, std::vector<Velocity>(q, v), ConcatMode::corrected);
        for (int i = 0; i < q; ++i) {
            CHECK(via_cv.boxes[i] == via_concat.boxes[i]);  // bit-exact
        }
    }
}

TEST_CASE("loss_past hand values") {
    // full-length identity
    PastSequence truth = linear_past(4, 4);
    std::vector<BoxWithVelocity> pred(truth.steps.begin(), truth.steps.end());
    CHECK(loss_past(truth, pred) == 0.0);

    // one valid step, every component off by one
    PastSequence one;
    one.steps.assign(4, BoxWithVelocity{});
    one.steps[3] = {{1, 2, 3, 4}, {5, 6, 7, 8}};
    one.valid_len = 1;
    std::vector<BoxWithVelocity> off{{{2, 3, 4, 5}, {6, 7, 8, 9}}};
    CHECK(loss_past(one, off) == doctest::Approx(1.0));

    // two valid steps, total deviation 4 -> 4 / 16
    PastSequence two;
    two.steps.assign(4, BoxWithVelocity{});
    two.steps[2] = {{0, 0, 1, 1}, {0, 0, 0, 0}};
    two.steps[3] = {{1, 0, 1, 1}, {1, 0, 0, 0}};
    two.valid_len = 2;
    std::vector<BoxWithVelocity> preds{{{2, 0, 1, 1}, {0, 0, 0, 0}},
                                       {{1, 1, 1, 1}, {1, 1, 0, 0}}};
    CHECK(loss_past(two, preds) == doctest::Approx(0.25));
}

TEST_CASE("loss_past ignores padding") {
    const auto params = forecaster_init(small_config(), 9);
    const auto enc = encode_past(linear_past(4, 3), params);
    const auto decoded = decode_past(enc.h_final, enc.phi_b, params);
    const double narrow = loss_past(linear_past(4, 3), decoded);

    ForecasterConfig wide = small_config();
    wide.p = 7;
    auto wide_params = params;
    wide_params.config = wide;
    const auto enc2 = encode_past(linear_past(7, 3), wide_params);
    const auto decoded2 = decode_past(enc2.h_final, enc2.phi_b, wide_params);
    const double padded = loss_past(linear_past(7, 3), decoded2);
    CHECK(narrow == padded);
}

TEST_CASE("loss_future hand values") {
    ForecastHorizon pred;
    pred.boxes = {{1, 1, 2, 2}, {2, 1, 2, 2}};
    CHECK(loss_future({{1, 1, 2, 2}, {2, 1, 2, 2}}, pred, 2) == 0.0);

    ForecastHorizon off;
    off.boxes = {{3, 3, 4, 4}};
    CHECK(loss_future({{1, 1, 2, 2}}, off, 1) == doctest::Approx(2.0));

    ForecastHorizon doubled;
    doubled.boxes = {{5, 5, 6, 6}};
    CHECK(loss_future({{1, 1, 2, 2}}, doubled, 1) == doctest::Approx(4.0));
}

TEST_CASE("forecast_loss sums") {
    CHECK(forecast_loss(0, 0) == 0.0);
    CHECK(forecast_loss(1.0, 2.0) == 3.0);
    CHECK(forecast_loss(0.25, 0) == 0.25);
}

TEST_CASE("uncertainty_loss values, derivative, permutation") {
    CHECK(uncertainty_loss({2, 4, 6}, {0, 0, 0}) == doctest::Approx(6.0));
    CHECK(uncertainty_loss({3.0}, {0.0}) == doctest::Approx(1.5));

    // analytic ds against central differences
    const double L = 2.5, s = 0.7, h = 1e-6;
    const double analytic = 0.5 * (1.0 - std::exp(-s) * L);
    const double numeric = (uncertainty_loss({L}, {s + h}) -
                            uncertainty_loss({L}, {s - h})) /
                           (2 * h);
    CHECK(analytic == doctest::Approx(numeric).epsilon(1e-6));

    CHECK(uncertainty_loss({1, 2, 3}, {0.1, 0.2, 0.3}) ==
          doctest::Approx(uncertainty_loss({3, 1, 2}, {0.3, 0.1, 0.2})));
}

TEST_CASE("forecast shape and determinism") {
    const auto params = forecaster_init(small_config(), 21);
    const Eigen::VectorXd ctx = Eigen::VectorXd::Zero(4);
    const auto past = linear_past(4, 4);
    const auto a = forecast(past, ctx, params, 5);
    const auto b = forecast(past, ctx, params, 5);
    REQUIRE(a.boxes.size() == 5);
    for (int i = 0; i < 5; ++i) CHECK(a.boxes[i] == b.boxes[i]);

    CHECK_THROWS_AS(forecast(linear_past(4, 1), ctx, params, 5),
                    std::logic_error);
}

TEST_CASE("checkpoint round trip reproduces forward output bit for bit") {
    const auto params = forecaster_init(small_config(), 33);
    const auto dir = std::filesystem::temp_directory_path() / "trackcast_ckpt";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "params.json").string();
    save_params(params, path);
    const auto loaded = load_params(path);

    const auto past = linear_past(4, 3);
    const Eigen::VectorXd ctx = Eigen::VectorXd::Unit(4, 2);
    const auto a = forecast(past, ctx, params, 5);
    const auto b = forecast(past, ctx, loaded, 5);
    for (int i = 0; i < 5; ++i) CHECK(a.boxes[i] == b.boxes[i]);
    CHECK(loaded.s_for == params.s_for);
    std::filesystem::remove_all(dir);
}

TEST_CASE("learned predictor honors the motion contract") {
    auto params = std::make_shared<ForecasterParams>(
        forecaster_init(small_config(), 55));
    LearnedPredictor pred(params);
    CHECK_FALSE(pred.ready());
    CHECK_THROWS_AS(pred.predict(5), std::logic_error);
    pred.observe({0, 0, 2, 2});
    CHECK_FALSE(pred.ready());
    pred.observe({1, 0, 2, 2});
    CHECK(pred.ready());
    CHECK(pred.predict(5).boxes.size() == 5);
    pred.reset();
    CHECK_FALSE(pred.ready());
}

}  // TEST_SUITE

#include <doctest.h>

#include "trackcast/geometry.hpp"
#include "trackcast/rng.hpp"

using namespace trackcast;

namespace {

BoundingBox random_box(Rng& rng) {
    return {rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0),
            rng.uniform(0.5, 30.0), rng.uniform(0.5, 30.0)};
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("iou identity, disjoint, hand value") {
    const BoundingBox a{5, 5, 2, 2};
    CHECK(iou(a, a) == doctest::Approx(1.0));
    CHECK(iou({0, 0, 2, 2}, {10, 10, 2, 2}) == 0.0);
    // intersection 1x2 = 2, union 4 + 4 - 2 = 6
    CHECK(iou({0, 0, 2, 2}, {1, 0, 2, 2}) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("iou rejects degenerate boxes") {
    CHECK(iou({0, 0, 0, 0}, {0, 0, 2, 2}) == 0.0);
    CHECK(iou({0, 0, 2, 2}, {0, 0, -1, 2}) == 0.0);
}

TEST_CASE("iou symmetry and range over random boxes") {
    Rng rng(42);
    for (int i = 0; i < 500; ++i) {
        const BoundingBox a = random_box(rng);
        const BoundingBox b = random_box(rng);
        const double ab = iou(a, b);
        CHECK(ab == iou(b, a));
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0);
        CHECK(iou(a, a) == doctest::Approx(1.0));
    }
}

TEST_CASE("iou_distance matrix") {
    const std::vector<BoundingBox> one{{5, 5, 2, 2}};
    CHECK(iou_distance(one, one)(0, 0) == doctest::Approx(0.0));
    CHECK(iou_distance({{0, 0, 2, 2}}, {{10, 10, 2, 2}})(0, 0) == 1.0);
    CHECK(iou_distance({{0, 0, 2, 2}}, {{1, 0, 2, 2}})(0, 0) ==
          doctest::Approx(2.0 / 3.0));
    const auto empty = iou_distance({}, one);
    CHECK(empty.rows() == 0);
    CHECK(empty.cols() == 1);
}

TEST_CASE("cosine_distance basics") {
    Eigen::VectorXd e1(3), e2(3), e3(3);
    e1 << 1, 0, 0;
    e2 << 0, 1, 0;
    e3 << -1, 0, 0;
    CHECK(cosine_distance({e1}, {e1})(0, 0) == doctest::Approx(0.0));
    CHECK(cosine_distance({e1}, {e3})(0, 0) == doctest::Approx(2.0));
    CHECK(cosine_distance({e1}, {e2})(0, 0) == doctest::Approx(1.0));

    Eigen::VectorXd wrong(2);
    wrong << 1, 0;
    CHECK_THROWS_AS(cosine_distance({e1}, {wrong}), std::invalid_argument);
}

TEST_CASE("cosine_distance scale invariance") {
    Rng rng(7);
    for (int i = 0; i < 100; ++i) {
        Eigen::VectorXd a(4), b(4);
        for (int k = 0; k < 4; ++k) {
            a(k) = rng.gaussian();
            b(k) = rng.gaussian();
        }
        if (a.norm() < 1e-9 || b.norm() < 1e-9) continue;
        const double d = cosine_distance({a}, {b})(0, 0);
        const double scaled = cosine_distance({(3.7 * a).eval()}, {b})(0, 0);
        CHECK(d == doctest::Approx(scaled).epsilon(1e-12));
        CHECK(cosine_distance({a}, {a})(0, 0) == doctest::Approx(0.0));
    }
}

TEST_CASE("velocities_from_boxes hand cases") {
    const auto v =
        velocities_from_boxes({{0, 0, 2, 2}, {1, 1, 2, 2}});
    REQUIRE(v.size() == 2);
    CHECK(v[0] == Velocity{0, 0, 0, 0});
    CHECK(v[1] == Velocity{1, 1, 0, 0});

    CHECK(velocities_from_boxes({{3, 4, 5, 6}}) ==
          std::vector<Velocity>{Velocity{}});
    const auto still = velocities_from_boxes({{0, 0, 2, 2}, {0, 0, 2, 2}});
    CHECK(still[1] == Velocity{0, 0, 0, 0});
    CHECK(velocities_from_boxes({}).empty());
}

TEST_CASE("velocities invert to the input by cumulative summation") {
    Rng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<BoundingBox> boxes;
        for (int i = 0; i < 12; ++i) boxes.push_back(random_box(rng));
        const auto vels = velocities_from_boxes(boxes);
        BoundingBox cur = boxes[0];
        for (size_t j = 1; j < boxes.size(); ++j) {
            cur = {cur.x + vels[j].dx, cur.y + vels[j].dy, cur.w + vels[j].dw,
                   cur.h + vels[j].dh};
            CHECK(cur.x == doctest::Approx(boxes[j].x).epsilon(1e-12));
            CHECK(cur.h == doctest::Approx(boxes[j].h).epsilon(1e-12));
        }
    }
}

TEST_CASE("center_distance_normalized") {
    CHECK(center_distance_normalized({50, 50, 2, 2}, 100, 100) == 0.0);
    CHECK(center_distance_normalized({0, 0, 2, 2}, 100, 100) ==
          doctest::Approx(1.0));
    CHECK(center_distance_normalized({75, 50, 2, 2}, 100, 100) ==
          doctest::Approx(25.0 / (50.0 * std::sqrt(2.0))));
}

TEST_CASE("frame observations validation") {
    FrameObservations obs;
    obs.frame_index = 1;
    obs.detections.push_back({1, 1, 2, 2});
    CHECK_THROWS_AS(obs.validate(), std::invalid_argument);
    obs.confidences.push_back(1.0);
    Eigen::VectorXd e(2);
    e << 1, 0;
    obs.embeddings.push_back(e);
    CHECK_NOTHROW(obs.validate());
}

}  // TEST_SUITE

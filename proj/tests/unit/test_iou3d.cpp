#include "cos3d/iou3d.hpp"

#include "doctest.h"
#include "support/test_helpers.hpp"

using namespace cos3d;

namespace {

Box3D axisBox(double x, double y, double z, double w, double h, double l) {
    Box3D b;
    b.center = Eigen::Vector3d(x, y, z);
    b.dims = Eigen::Vector3d(w, h, l);
    return b;
}

}  // namespace

TEST_SUITE_BEGIN("iou3d");

TEST_CASE("identical boxes") {
    const Box3D a = axisBox(1, 2, 3, 1, 1, 1);
    CHECK(iou3dExact(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(iou3dOracle(a, a, 1000, 7) == doctest::Approx(1.0));
}

TEST_CASE("disjoint boxes") {
    const Box3D a = axisBox(0, 0, 0, 1, 1, 1);
    const Box3D b = axisBox(10, 0, 0, 1, 1, 1);
    CHECK(iou3dExact(a, b) == doctest::Approx(0.0));
    CHECK(iou3dOracle(a, b, 1000, 7) == doctest::Approx(0.0));
}

TEST_CASE("axis-aligned offset cubes have the analytic overlap") {
    const Box3D a = axisBox(0, 0, 0, 1, 1, 1);
    const Box3D b = axisBox(0.5, 0, 0, 1, 1, 1);
    // 0.5 overlap along x: 0.5 / (1 + 1 - 0.5) = 1/3
    CHECK(std::abs(iou3dExact(a, b) - 1.0 / 3.0) < 1e-9);
    CHECK(std::abs(iou3dExact(a, b, Iou3dPath::General) - 1.0 / 3.0) < 1e-9);
    CHECK(iou3dOracle(a, b, 1000000, 42) == doctest::Approx(1.0 / 3.0).epsilon(0.006));
}

TEST_CASE("45-degree rotation about a shared center matches the oracle") {
    const Box3D a = axisBox(0, 0, 0, 1, 1, 1);
    Box3D b = a;
    b.rot = Rotation::fromUpAxisAngle(kPi / 4);
    const double exact = iou3dExact(a, b);
    const double mc = iou3dOracle(a, b, 1000000, 11);
    CHECK(std::abs(exact - mc) < 2e-3);
    // Analytic footprint intersection of a unit square with its 45-degree
    // rotation is the octagon of area 2 (sqrt(2) - 1); IoU reduces to 1/sqrt(2).
    const double inter = 2.0 * (std::sqrt(2.0) - 1.0);
    CHECK(exact == doctest::Approx(inter / (2.0 - inter)).epsilon(1e-9));
    CHECK(exact == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
}

TEST_CASE("zero-volume input is rejected") {
    const Box3D a = axisBox(0, 0, 0, 0, 1, 1);
    const Box3D b = axisBox(0, 0, 0, 1, 1, 1);
    CHECK_THROWS_AS(iou3dExact(a, b), std::invalid_argument);
}

TEST_CASE("containment gives the volume ratio") {
    const Box3D outer = axisBox(0, 0, 0, 2, 2, 2);
    Box3D inner = axisBox(0.1, -0.2, 0.3, 0.5, 0.5, 0.5);
    inner.rot = Rotation::fromEulerZYX(0.3, 0.2, 0.1);
    const double expect = inner.volume() / outer.volume();
    CHECK(iou3dExact(inner, outer) == doctest::Approx(expect).epsilon(1e-6));
    CHECK(iou3dExact(outer, inner) == doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("symmetry and rigid invariance on random pairs") {
    Rng rng(5150);
    for (int i = 0; i < 200; ++i) {
        Box3D a = testing::randomBoxInFront(rng);
        Box3D b = testing::randomBoxInFront(rng);
        b.center = a.center + Eigen::Vector3d(rng.uniform(-3, 3), rng.uniform(-3, 3),
                                              rng.uniform(-3, 3));
        const double ab = iou3dExact(a, b, Iou3dPath::General);
        const double ba = iou3dExact(b, a, Iou3dPath::General);
        CHECK(std::abs(ab - ba) < 1e-9);

        const Rotation q = testing::randomRotation(rng);
        const Eigen::Vector3d t(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
        auto moved = [&](const Box3D& box) {
            Box3D out = box;
            out.center = q.matrix() * box.center + t;
            out.rot = Rotation::fromMatrix(q.matrix() * box.rot.matrix(), 1e-7);
            return out;
        };
        CHECK(std::abs(iou3dExact(moved(a), moved(b), Iou3dPath::General) - ab) < 1e-6);
    }
}

TEST_CASE("yaw fast path equals the general clipper") {
    Rng rng(808);
    for (int i = 0; i < 300; ++i) {
        Box3D a = testing::randomBoxInFront(rng);
        Box3D b = testing::randomBoxInFront(rng);
        a.rot = Rotation::fromUpAxisAngle(rng.uniform(-kPi, kPi));
        b.rot = Rotation::fromUpAxisAngle(rng.uniform(-kPi, kPi));
        b.center = a.center + Eigen::Vector3d(rng.uniform(-4, 4), rng.uniform(-2, 2),
                                              rng.uniform(-4, 4));
        const double fast = iou3dExact(a, b, Iou3dPath::YawFast);
        const double general = iou3dExact(a, b, Iou3dPath::General);
        CHECK(std::abs(fast - general) < 1e-9);
        CHECK(iou3dExact(a, b) == doctest::Approx(fast));  // Auto dispatches to the fast path
    }
}

TEST_CASE("oracle agreement over random oriented pairs (smoke run)") {
    // The acceptance suite runs the full 1000-pair sweep at 1e6 samples;
    // this is the fast regression version.
    Rng rng(90210);
    for (int i = 0; i < 25; ++i) {
        Box3D a = testing::randomBoxInFront(rng);
        Box3D b;
        b.dims = Eigen::Vector3d(rng.uniform(0.2, 5), rng.uniform(0.2, 5), rng.uniform(0.2, 5));
        b.rot = testing::randomRotation(rng);
        b.center = a.center + Eigen::Vector3d(rng.uniform(-2, 2), rng.uniform(-2, 2),
                                              rng.uniform(-2, 2));
        const double exact = iou3dExact(a, b, Iou3dPath::General);
        const double mc = iou3dOracle(a, b, 200000, 1234 + i);
        CHECK(std::abs(exact - mc) < 2e-2);
    }
}

TEST_CASE("oracle is deterministic under its seed") {
    Rng rng(4);
    const Box3D a = testing::randomBoxInFront(rng);
    Box3D b = a;
    b.center.x() += 0.7;
    CHECK(iou3dOracle(a, b, 50000, 123) == iou3dOracle(a, b, 50000, 123));
    CHECK(iou3dOracle(a, b, 50000, 123) != iou3dOracle(a, b, 50000, 124));
}

TEST_CASE("iou2d") {
    const CameraIntrinsics cam = testing::defaultCam();
    const Box2D a = Box2D::fromPixel({0, 0, 10, 10}, cam);
    CHECK(iou2d(a, a) == doctest::Approx(1.0));
    const Box2D b = Box2D::fromPixel({20, 20, 30, 30}, cam);
    CHECK(iou2d(a, b) == doctest::Approx(0.0));
    const Box2D c = Box2D::fromPixel({5, 0, 15, 10}, cam);
    CHECK(iou2d(a, c) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_SUITE_END();

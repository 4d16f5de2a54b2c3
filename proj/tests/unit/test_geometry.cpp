#include "cos3d/geometry.hpp"

#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "support/test_helpers.hpp"

using namespace cos3d;
using testing::angleDiff;
using testing::defaultCam;

TEST_SUITE_BEGIN("geometry");

TEST_CASE("intrinsics validation") {
    CameraIntrinsics cam = defaultCam();
    CHECK_NOTHROW(cam.validate());
    CHECK(cam.principalPointInBounds());

    cam.fx = 0;
    CHECK_THROWS_AS(cam.validate(), std::invalid_argument);
    cam = defaultCam();
    cam.width = 0;
    CHECK_THROWS_AS(cam.validate(), std::invalid_argument);
    cam = defaultCam();
    cam.cx = -10;  // suspicious but accepted
    CHECK_NOTHROW(cam.validate());
    CHECK_FALSE(cam.principalPointInBounds());
}

TEST_CASE("rotation identity and unit views") {
    const Rotation r = Rotation::fromEulerZYX(0, 0, 0);
    CHECK((r.matrix() - Eigen::Matrix3d::Identity()).norm() == doctest::Approx(0).epsilon(1e-12));
    const auto eu = r.eulerUnit();
    CHECK(eu[0] == doctest::Approx(0.5));
    CHECK(eu[1] == doctest::Approx(0.5));
    CHECK(eu[2] == doctest::Approx(0.5));
    const auto sc = r.sinCosUnit();
    for (int i = 0; i < 3; ++i) CHECK(sc[i] == doctest::Approx(0.5));   // sines
    for (int i = 3; i < 6; ++i) CHECK(sc[i] == doctest::Approx(1.0));   // cosines
}

TEST_CASE("euler unit map is the affine rescale") {
    const Rotation r = Rotation::fromEulerZYX(kPi / 2, 0, 0);
    CHECK(r.eulerUnit()[0] == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("rotation round trip over random rotations") {
    Rng rng(101);
    int checked = 0;
    for (int i = 0; i < 1000; ++i) {
        const Rotation r = testing::randomRotation(rng);
        const auto e = r.eulerZYX();
        if (std::abs(e[1]) >= kPi / 2 - 1e-3) continue;  // away from gimbal lock
        const Rotation back = Rotation::fromEulerZYX(e);
        CHECK((back.matrix() - r.matrix()).cwiseAbs().maxCoeff() < 1e-6);
        ++checked;
    }
    CHECK(checked > 900);
}

TEST_CASE("euler angle ranges") {
    Rng rng(77);
    for (int i = 0; i < 200; ++i) {
        const auto e = testing::randomRotation(rng).eulerZYX();
        for (double a : e) {
            CHECK(a >= -kPi);
            CHECK(a < kPi);
        }
    }
}

TEST_CASE("unit views decode back to angles") {
    Rng rng(55);
    for (int i = 0; i < 500; ++i) {
        const Rotation r = testing::randomRotation(rng);
        const auto e = r.eulerZYX();
        const auto eu = r.eulerUnit();
        const auto sc = r.sinCosUnit();
        for (int k = 0; k < 3; ++k) {
            CHECK(angleDiff(angleFromUnit(eu[k]), e[k]) < 1e-9);
            CHECK(angleDiff(angleFromSinCosUnit(sc[k], sc[k + 3]), e[k]) < 1e-9);
        }
    }
}

TEST_CASE("gimbal lock decomposition is deterministic") {
    const Rotation r = Rotation::fromEulerZYX(0.7, kPi / 2, 0.3);
    const auto e = r.eulerZYX();
    CHECK(e[0] == doctest::Approx(0.0).epsilon(1e-9));  // az forced to 0
    CHECK(e[1] == doctest::Approx(kPi / 2));
    const Rotation back = Rotation::fromEulerZYX(e);
    CHECK((back.matrix() - r.matrix()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("up-axis rotations") {
    const Rotation r = Rotation::fromUpAxisAngle(2.5);  // beyond asin range
    CHECK(r.isUpAxisOnly());
    CHECK(r.upAxisAngle() == doctest::Approx(2.5).epsilon(1e-12));
    CHECK_FALSE(Rotation::fromEulerZYX(0.3, 0.2, 0.1).isUpAxisOnly());
}

TEST_CASE("orthonormalized recovers a rotation from rounded data") {
    Rng rng(9);
    const Rotation r = testing::randomRotation(rng);
    Eigen::Matrix3d rounded = r.matrix();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) rounded(i, j) = std::round(rounded(i, j) * 100.0) / 100.0;
    CHECK_THROWS_AS(Rotation::fromMatrix(rounded), std::invalid_argument);
    const Rotation fixed = Rotation::orthonormalized(rounded);
    CHECK((fixed.matrix().transpose() * fixed.matrix() - Eigen::Matrix3d::Identity())
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    CHECK((fixed.matrix() - r.matrix()).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("projectBox reproduces the corner-hull oracle") {
    const CameraIntrinsics cam = defaultCam();
    Box3D box;
    box.center = Eigen::Vector3d(0, 0, 5);
    box.dims = Eigen::Vector3d(1, 1, 1);

    // Oracle: enumerate the 8 corners, project each, take the hull.
    PixelRect hull{1e18, 1e18, -1e18, -1e18};
    for (const auto& c : box.corners()) {
        const double u = cam.fx * c.x() / c.z() + cam.cx;
        const double v = cam.fy * c.y() / c.z() + cam.cy;
        hull[0] = std::min(hull[0], u);
        hull[1] = std::min(hull[1], v);
        hull[2] = std::max(hull[2], u);
        hull[3] = std::max(hull[3], v);
    }

    const ProjectedBox p = projectBox(box, cam);
    for (int i = 0; i < 4; ++i) CHECK(p.box.pixel[i] == doctest::Approx(hull[i]).epsilon(1e-12));
    CHECK(p.box.pixel[0] == doctest::Approx(388.888889).epsilon(1e-6));
    CHECK(p.box.pixel[1] == doctest::Approx(388.888889).epsilon(1e-6));
    CHECK(p.box.pixel[2] == doctest::Approx(611.111111).epsilon(1e-6));
    CHECK(p.box.pixel[3] == doctest::Approx(611.111111).epsilon(1e-6));
}

TEST_CASE("zero-size box projects to the principal ray point") {
    const CameraIntrinsics cam = defaultCam();
    Box3D box;
    box.center = Eigen::Vector3d(0, 0, 4);
    box.dims = Eigen::Vector3d::Zero();
    const ProjectedBox p = projectBox(box, cam);
    for (int i = 0; i < 4; ++i) CHECK(p.box.pixel[i] == doctest::Approx(500.0));
}

TEST_CASE("quarter-turn up-axis rotation swaps W/L with identical hulls") {
    const CameraIntrinsics cam = defaultCam();
    Box3D a;
    a.center = Eigen::Vector3d(0, 0, 5);
    a.dims = Eigen::Vector3d(1, 1, 2);
    a.rot = Rotation::fromUpAxisAngle(kPi / 2);
    Box3D b;
    b.center = a.center;
    b.dims = Eigen::Vector3d(2, 1, 1);

    const ProjectedBox pa = projectBox(a, cam);
    const ProjectedBox pb = projectBox(b, cam);
    for (int i = 0; i < 4; ++i) CHECK(pa.box.pixel[i] == doctest::Approx(pb.box.pixel[i]));
}

TEST_CASE("behind-camera projection is rejected") {
    Box3D box;
    box.center = Eigen::Vector3d(0, 0, -5);
    box.dims = Eigen::Vector3d(1, 1, 1);
    CHECK_THROWS_AS(projectBox(box, defaultCam()), BehindCameraError);
}

TEST_CASE("frustum statuses") {
    const CameraIntrinsics cam = defaultCam();
    Box3D box;
    box.dims = Eigen::Vector3d(1, 1, 1);

    box.center = Eigen::Vector3d(0, 0, -5);
    CHECK(frustumStatus(box, cam) == FrustumStatus::BehindCamera);

    box.center = Eigen::Vector3d(0, 0, 5);
    CHECK(frustumStatus(box, cam) == FrustumStatus::Inside);

    // Hull straddling x = width: center ray at the right image border.
    box.center = Eigen::Vector3d(2.5, 0, 5);  // u_center = 1000
    CHECK(frustumStatus(box, cam) == FrustumStatus::PartiallyOutside);

    box.center = Eigen::Vector3d(10, 0, 5);  // far beyond the border
    CHECK(frustumStatus(box, cam) == FrustumStatus::FullyOutside);
}

TEST_CASE("truncation examples") {
    const CameraIntrinsics cam = defaultCam();
    Box3D box;
    box.dims = Eigen::Vector3d(1, 1, 1);

    box.center = Eigen::Vector3d(0, 0, 5);
    CHECK(truncationEstimate(box, cam) == doctest::Approx(0.0));

    // Hull exactly half outside in x: center projected on the right border,
    // symmetric box, z-extent collapsed so the hull is an exact rectangle.
    box.dims = Eigen::Vector3d(1, 1, 0);
    box.center = Eigen::Vector3d(2.5, 0, 5);
    CHECK(truncationEstimate(box, cam) == doctest::Approx(0.5).epsilon(1e-9));

    box.center = Eigen::Vector3d(10, 0, 5);
    CHECK(truncationEstimate(box, cam) == doctest::Approx(1.0));
}

TEST_CASE("truncation matches frustum status on random boxes") {
    const CameraIntrinsics cam = defaultCam();
    Rng rng(404);
    for (int i = 0; i < 1000; ++i) {
        Box3D box = testing::randomBoxInFront(rng);
        box.center.x() = rng.uniform(-30, 30);
        box.center.y() = rng.uniform(-15, 15);
        const FrustumStatus st = frustumStatus(box, cam);
        if (st == FrustumStatus::BehindCamera) continue;
        const double tr = truncationEstimate(box, cam);
        if (st == FrustumStatus::Inside) CHECK(tr == doctest::Approx(0.0));
        if (st == FrustumStatus::FullyOutside) CHECK(tr == doctest::Approx(1.0));
        if (st == FrustumStatus::PartiallyOutside) {
            CHECK(tr > 0.0);
            CHECK(tr < 1.0);
        }
    }
}

TEST_CASE("projected center lies in the hull for boxes in front") {
    const CameraIntrinsics cam = defaultCam();
    Rng rng(2024);
    for (int i = 0; i < 1000; ++i) {
        const Box3D box = testing::randomBoxInFront(rng);
        const ProjectedBox p = projectBox(box, cam);
        const double u = cam.fx * box.center.x() / box.center.z() + cam.cx;
        const double v = cam.fy * box.center.y() / box.center.z() + cam.cy;
        CHECK(u >= p.unclipped[0] - 1e-9);
        CHECK(u <= p.unclipped[2] + 1e-9);
        CHECK(v >= p.unclipped[1] - 1e-9);
        CHECK(v <= p.unclipped[3] + 1e-9);
    }
}

TEST_CASE("depthOf") {
    Box3D box;
    box.center = Eigen::Vector3d(0, 0, 7.2);
    CHECK(depthOf(box) == doctest::Approx(7.2));
    box.center = Eigen::Vector3d(3, 0, 4);
    CHECK(depthOf(box) == doctest::Approx(4.0));
    CHECK(depthOf(box, DepthConvention::EuclideanNorm) == doctest::Approx(5.0));

    const std::vector<double> depths{7.2, 3.1, 5.0};
    std::vector<std::size_t> idx{0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return depths[a] < depths[b]; });
    CHECK(idx == std::vector<std::size_t>{1, 2, 0});
}

TEST_CASE("visibility examples") {
    const InstanceFootprint target{{100, 100, 200, 200}, 10.0};

    SUBCASE("no occluders") {
        CHECK(visibilityEstimate(target, {}) == doctest::Approx(1.0));
    }
    SUBCASE("full cover by a nearer box") {
        const std::vector<InstanceFootprint> occ{{{50, 50, 300, 300}, 5.0}};
        CHECK(visibilityEstimate(target, occ) == doctest::Approx(0.0));
    }
    SUBCASE("left half covered") {
        const std::vector<InstanceFootprint> occ{{{100, 100, 150, 200}, 5.0}};
        CHECK(visibilityEstimate(target, occ) == doctest::Approx(0.5));
    }
    SUBCASE("farther boxes do not occlude") {
        const std::vector<InstanceFootprint> occ{{{50, 50, 300, 300}, 20.0}};
        CHECK(visibilityEstimate(target, occ) == doctest::Approx(1.0));
    }
    SUBCASE("equal depth does not occlude (strict ordering)") {
        const std::vector<InstanceFootprint> occ{{{50, 50, 300, 300}, 10.0}};
        CHECK(visibilityEstimate(target, occ) == doctest::Approx(1.0));
    }
}

TEST_CASE("visibility against a grid oracle and monotonicity") {
    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        const InstanceFootprint target{
            {rng.uniform(0, 400), rng.uniform(0, 400), rng.uniform(420, 900), rng.uniform(420, 900)},
            10.0};
        std::vector<InstanceFootprint> occluders;
        double prev = 1.0;
        for (int k = 0; k < 6; ++k) {
            const double x0 = rng.uniform(0, 800), y0 = rng.uniform(0, 800);
            occluders.push_back(
                {{x0, y0, x0 + rng.uniform(10, 300), y0 + rng.uniform(10, 300)},
                 rng.uniform(1, 15)});
            const double vis = visibilityEstimate(target, occluders);
            CHECK(vis <= prev + 1e-12);  // non-increasing as occluders accumulate
            prev = vis;
        }
        // Grid oracle for the final configuration.
        const int grid = 200;
        const double dx = (target.rect[2] - target.rect[0]) / grid;
        const double dy = (target.rect[3] - target.rect[1]) / grid;
        int visible = 0;
        for (int ix = 0; ix < grid; ++ix) {
            for (int iy = 0; iy < grid; ++iy) {
                const double px = target.rect[0] + (ix + 0.5) * dx;
                const double py = target.rect[1] + (iy + 0.5) * dy;
                bool covered = false;
                for (const auto& o : occluders) {
                    if (o.depth < target.depth && px >= o.rect[0] && px <= o.rect[2] &&
                        py >= o.rect[1] && py <= o.rect[3]) {
                        covered = true;
                        break;
                    }
                }
                if (!covered) ++visible;
            }
        }
        const double approx = static_cast<double>(visible) / (grid * grid);
        CHECK(visibilityEstimate(target, occluders) == doctest::Approx(approx).epsilon(0.02));
    }
}

TEST_CASE("quantization of 2D boxes") {
    const CameraIntrinsics cam = defaultCam();
    const Box2D full = Box2D::fromPixel({0, 0, 1000, 1000}, cam);
    CHECK(full.norm == NormRect{0, 0, 1000, 1000});

    const Box2D quarter = Box2D::fromPixel({250, 0, 500, 500}, cam);
    CHECK(quarter.norm[0] == 250);

    // quantize . dequantize is the identity on the integer grid
    for (int v : {0, 1, 250, 499, 500, 999, 1000}) {
        const NormRect nm{v, v, v, v};
        const PixelRect px = dequantizeRect(nm, cam);
        CHECK(quantizeRect(px, cam) == nm);
    }
    CHECK_THROWS_AS(Box2D::fromPixel({10, 0, 5, 5}, cam), std::invalid_argument);
}

TEST_SUITE_END();

#include "cos3d/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cos3d {

double wrapAngle(double a) {
    a = std::fmod(a + kPi, 2.0 * kPi);
    if (a < 0) a += 2.0 * kPi;
    return a - kPi;
}

void CameraIntrinsics::validate() const {
    if (!(fx > 0) || !(fy > 0)) throw std::invalid_argument("intrinsics: fx and fy must be > 0");
    if (width < 1 || height < 1) throw std::invalid_argument("intrinsics: image size must be >= 1");
    if (!std::isfinite(cx) || !std::isfinite(cy))
        throw std::invalid_argument("intrinsics: principal point must be finite");
}

bool CameraIntrinsics::principalPointInBounds() const {
    return cx >= 0 && cx <= width && cy >= 0 && cy <= height;
}

Eigen::Matrix3d CameraIntrinsics::matrixK() const {
    Eigen::Matrix3d k;
    k << fx, 0, cx, 0, fy, cy, 0, 0, 1;
    return k;
}

Rotation Rotation::fromEulerZYX(double az, double ay, double ax) {
    if (!std::isfinite(az) || !std::isfinite(ay) || !std::isfinite(ax))
        throw std::invalid_argument("rotation: non-finite euler angle");
    const Eigen::Matrix3d m =
        (Eigen::AngleAxisd(az, Eigen::Vector3d::UnitZ()) *
         Eigen::AngleAxisd(ay, Eigen::Vector3d::UnitY()) *
         Eigen::AngleAxisd(ax, Eigen::Vector3d::UnitX()))
            .toRotationMatrix();
    return Rotation(m);
}

Rotation Rotation::fromMatrix(const Eigen::Matrix3d& m, double tol) {
    const double orthoErr = (m.transpose() * m - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    if (!(orthoErr <= tol)) throw std::invalid_argument("rotation: matrix is not orthonormal");
    if (!(std::abs(m.determinant() - 1.0) <= tol))
        throw std::invalid_argument("rotation: matrix determinant is not +1");
    return Rotation(m);
}

Rotation Rotation::orthonormalized(const Eigen::Matrix3d& m) {
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d r = svd.matrixU() * svd.matrixV().transpose();
    if (r.determinant() < 0) {
        Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
        flip(2, 2) = -1;
        r = svd.matrixU() * flip * svd.matrixV().transpose();
    }
    return Rotation(r);
}

Rotation Rotation::fromUpAxisAngle(double angle) {
    if (!std::isfinite(angle)) throw std::invalid_argument("rotation: non-finite angle");
    return Rotation(Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitY()).toRotationMatrix());
}

std::array<double, 3> Rotation::eulerZYX() const {
    // R = Rz(az) Ry(ay) Rx(ax):
    //   R(2,0) = -sin ay, R(1,0)/R(0,0) = tan az, R(2,1)/R(2,2) = tan ax
    const double sy = std::clamp(-m_(2, 0), -1.0, 1.0);
    double az, ay, ax;
    if (1.0 - std::abs(sy) < 1e-12) {
        // Gimbal lock: az fixed to 0, ax absorbs the remaining rotation.
        ay = std::copysign(kPi / 2.0, sy);
        az = 0.0;
        if (sy > 0)
            ax = std::atan2(m_(0, 1), m_(0, 2));
        else
            ax = std::atan2(-m_(0, 1), -m_(0, 2));
    } else {
        ay = std::asin(sy);
        az = std::atan2(m_(1, 0), m_(0, 0));
        ax = std::atan2(m_(2, 1), m_(2, 2));
    }
    return {wrapAngle(az), wrapAngle(ay), wrapAngle(ax)};
}

std::array<double, 3> Rotation::eulerUnit() const {
    const auto e = eulerZYX();
    return {unitFromAngle(e[0]), unitFromAngle(e[1]), unitFromAngle(e[2])};
}

std::array<double, 6> Rotation::sinCosUnit() const {
    const auto e = eulerZYX();
    return {(std::sin(e[0]) + 1.0) / 2.0, (std::sin(e[1]) + 1.0) / 2.0,
            (std::sin(e[2]) + 1.0) / 2.0, (std::cos(e[0]) + 1.0) / 2.0,
            (std::cos(e[1]) + 1.0) / 2.0, (std::cos(e[2]) + 1.0) / 2.0};
}

double Rotation::upAxisAngle() const { return wrapAngle(std::atan2(m_(0, 2), m_(0, 0))); }

bool Rotation::isUpAxisOnly(double tol) const {
    return std::abs(m_(0, 1)) <= tol && std::abs(m_(1, 0)) <= tol && std::abs(m_(1, 2)) <= tol &&
           std::abs(m_(2, 1)) <= tol && std::abs(m_(1, 1) - 1.0) <= tol;
}

double angleFromUnit(double u) { return u * 2.0 * kPi - kPi; }
double unitFromAngle(double a) { return (a + kPi) / (2.0 * kPi); }
double angleFromSinCosUnit(double sinUnit, double cosUnit) {
    return std::atan2(2.0 * sinUnit - 1.0, 2.0 * cosUnit - 1.0);
}

std::array<Eigen::Vector3d, 8> Box3D::corners() const {
    const Eigen::Vector3d h = dims / 2.0;
    const Eigen::Matrix3d& r = rot.matrix();
    std::array<Eigen::Vector3d, 8> out;
    for (int i = 0; i < 8; ++i) {
        const Eigen::Vector3d local((i & 1) ? h.x() : -h.x(), (i & 2) ? h.y() : -h.y(),
                                    (i & 4) ? h.z() : -h.z());
        out[i] = center + r * local;
    }
    return out;
}

double rectArea(const PixelRect& r) {
    return std::max(0.0, r[2] - r[0]) * std::max(0.0, r[3] - r[1]);
}

PixelRect rectIntersect(const PixelRect& a, const PixelRect& b) {
    return {std::max(a[0], b[0]), std::max(a[1], b[1]), std::min(a[2], b[2]),
            std::min(a[3], b[3])};
}

NormRect quantizeRect(const PixelRect& px, const CameraIntrinsics& cam) {
    auto q = [](double v, double size) {
        const long long n = std::llround(v * 1000.0 / size);
        return static_cast<int>(std::clamp(n, 0LL, 1000LL));
    };
    return {q(px[0], cam.width), q(px[1], cam.height), q(px[2], cam.width), q(px[3], cam.height)};
}

PixelRect dequantizeRect(const NormRect& nm, const CameraIntrinsics& cam) {
    return {nm[0] * cam.width / 1000.0, nm[1] * cam.height / 1000.0, nm[2] * cam.width / 1000.0,
            nm[3] * cam.height / 1000.0};
}

static void checkRectOrdering(const PixelRect& px) {
    if (!(px[0] <= px[2]) || !(px[1] <= px[3]))
        throw std::invalid_argument("box2d: min must not exceed max");
}

Box2D Box2D::fromPixel(const PixelRect& px, const CameraIntrinsics& cam) {
    checkRectOrdering(px);
    return Box2D{px, quantizeRect(px, cam)};
}

Box2D Box2D::fromNorm(const NormRect& nm, const CameraIntrinsics& cam) {
    Box2D b{dequantizeRect(nm, cam), nm};
    checkRectOrdering(b.pixel);
    return b;
}

Box2D Box2D::fromViews(const PixelRect& px, const NormRect& nm) {
    checkRectOrdering(px);
    return Box2D{px, nm};
}

static PixelRect projectedHull(const Box3D& box, const CameraIntrinsics& cam, double zNear) {
    PixelRect hull{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                   -std::numeric_limits<double>::infinity(),
                   -std::numeric_limits<double>::infinity()};
    for (const auto& c : box.corners()) {
        const double z = std::max(c.z(), zNear);
        const double u = cam.fx * c.x() / z + cam.cx;
        const double v = cam.fy * c.y() / z + cam.cy;
        hull[0] = std::min(hull[0], u);
        hull[1] = std::min(hull[1], v);
        hull[2] = std::max(hull[2], u);
        hull[3] = std::max(hull[3], v);
    }
    return hull;
}

ProjectedBox projectBox(const Box3D& box, const CameraIntrinsics& cam, double zNear) {
    bool anyInFront = false;
    for (const auto& c : box.corners())
        if (c.z() > zNear) anyInFront = true;
    if (!anyInFront) throw BehindCameraError("projectBox: all corners at or behind zNear");

    const PixelRect hull = projectedHull(box, cam, zNear);
    const PixelRect image{0, 0, static_cast<double>(cam.width), static_cast<double>(cam.height)};
    PixelRect clipped{std::clamp(hull[0], image[0], image[2]),
                      std::clamp(hull[1], image[1], image[3]),
                      std::clamp(hull[2], image[0], image[2]),
                      std::clamp(hull[3], image[1], image[3])};
    return ProjectedBox{Box2D::fromPixel(clipped, cam), hull};
}

FrustumStatus frustumStatus(const Box3D& box, const CameraIntrinsics& cam, double zNear) {
    bool anyZPositive = false;
    for (const auto& c : box.corners())
        if (c.z() > 0) anyZPositive = true;
    if (!anyZPositive) return FrustumStatus::BehindCamera;

    const PixelRect hull = projectedHull(box, cam, zNear);
    const double w = cam.width, h = cam.height;
    if (hull[0] >= 0 && hull[1] >= 0 && hull[2] <= w && hull[3] <= h)
        return FrustumStatus::Inside;
    if (hull[2] <= 0 || hull[0] >= w || hull[3] <= 0 || hull[1] >= h)
        return FrustumStatus::FullyOutside;
    return FrustumStatus::PartiallyOutside;
}

double truncationEstimate(const Box3D& box, const CameraIntrinsics& cam, double zNear) {
    if (frustumStatus(box, cam, zNear) == FrustumStatus::BehindCamera)
        throw BehindCameraError("truncationEstimate: box is behind the camera");
    const PixelRect hull = projectedHull(box, cam, zNear);
    const double full = rectArea(hull);
    if (full <= 0) return 0.0;
    const PixelRect image{0, 0, static_cast<double>(cam.width), static_cast<double>(cam.height)};
    const double kept = rectArea(rectIntersect(hull, image));
    return std::clamp(1.0 - kept / full, 0.0, 1.0);
}

double depthOf(const Box3D& box, DepthConvention conv) {
    return conv == DepthConvention::CenterZ ? box.center.z() : box.center.norm();
}

double rectUnionAreaInWindow(std::span<const PixelRect> rects, const PixelRect& window) {
    std::vector<PixelRect> clipped;
    std::vector<double> xs;
    for (const auto& r : rects) {
        const PixelRect c = rectIntersect(r, window);
        if (c[2] > c[0] && c[3] > c[1]) {
            clipped.push_back(c);
            xs.push_back(c[0]);
            xs.push_back(c[2]);
        }
    }
    if (clipped.empty()) return 0.0;
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

    double area = 0.0;
    std::vector<std::array<double, 2>> intervals;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        const double x0 = xs[i], x1 = xs[i + 1];
        const double mid = (x0 + x1) / 2.0;
        intervals.clear();
        for (const auto& c : clipped)
            if (c[0] <= mid && mid <= c[2]) intervals.push_back({c[1], c[3]});
        if (intervals.empty()) continue;
        std::sort(intervals.begin(), intervals.end());
        double covered = 0.0, curLo = intervals[0][0], curHi = intervals[0][1];
        for (std::size_t k = 1; k < intervals.size(); ++k) {
            if (intervals[k][0] > curHi) {
                covered += curHi - curLo;
                curLo = intervals[k][0];
                curHi = intervals[k][1];
            } else {
                curHi = std::max(curHi, intervals[k][1]);
            }
        }
        covered += curHi - curLo;
        area += covered * (x1 - x0);
    }
    return area;
}

double visibilityEstimate(const InstanceFootprint& target,
                          std::span<const InstanceFootprint> occluders) {
    const double targetArea = rectArea(target.rect);
    if (targetArea <= 0) return 1.0;
    std::vector<PixelRect> nearer;
    for (const auto& o : occluders)
        if (o.depth < target.depth) nearer.push_back(o.rect);
    const double covered = rectUnionAreaInWindow(nearer, target.rect);
    return std::clamp(1.0 - covered / targetArea, 0.0, 1.0);
}

}  // namespace cos3d

#include "cos3d/iou3d.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "cos3d/common.hpp"

namespace cos3d {
namespace {

using Vec3 = Eigen::Vector3d;
using Face = std::vector<Vec3>;

constexpr double kMinFaceArea = 1e-12;  // m^2; collapsed clip faces are dropped

// Face corner indices of Box3D::corners() with outward winding
// (bit0 -> +x, bit1 -> +y, bit2 -> +z).
constexpr int kBoxFaces[6][4] = {
    {1, 3, 7, 5},  // +x
    {0, 4, 6, 2},  // -x
    {2, 6, 7, 3},  // +y
    {0, 1, 5, 4},  // -y
    {4, 5, 7, 6},  // +z
    {0, 2, 3, 1},  // -z
};

std::vector<Face> boxFaces(const Box3D& box) {
    const auto c = box.corners();
    std::vector<Face> faces(6);
    for (int f = 0; f < 6; ++f) {
        faces[f] = {c[kBoxFaces[f][0]], c[kBoxFaces[f][1]], c[kBoxFaces[f][2]],
                    c[kBoxFaces[f][3]]};
    }
    return faces;
}

struct HalfSpace {
    Vec3 n;    // unit outward normal; kept region is n.x <= d
    double d;
};

std::array<HalfSpace, 6> boxHalfSpaces(const Box3D& box) {
    std::array<HalfSpace, 6> hs;
    const Eigen::Matrix3d& r = box.rot.matrix();
    const Vec3 h = box.dims / 2.0;
    int k = 0;
    for (int axis = 0; axis < 3; ++axis) {
        for (int sign : {1, -1}) {
            const Vec3 n = sign * r.col(axis);
            const Vec3 p = box.center + n * h[axis];
            hs[k++] = HalfSpace{n, n.dot(p)};
        }
    }
    return hs;
}

double polygonArea(const Face& f) {
    if (f.size() < 3) return 0.0;
    Vec3 normal = Vec3::Zero();
    for (std::size_t i = 1; i + 1 < f.size(); ++i)
        normal += (f[i] - f[0]).cross(f[i + 1] - f[0]);
    return normal.norm() / 2.0;
}

// Sutherland-Hodgman against one plane. Vertices within eps of the plane
// count as kept and as cross-section points; crossings are recorded only for
// strict sign changes, so faces coplanar with the plane never spawn a
// duplicate cap.
Face clipFace(const Face& face, const HalfSpace& hs, double eps, std::vector<Vec3>& capPoints) {
    Face out;
    const std::size_t n = face.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3& a = face[i];
        const Vec3& b = face[(i + 1) % n];
        const double da = hs.n.dot(a) - hs.d;
        const double db = hs.n.dot(b) - hs.d;
        if (da <= eps) {
            out.push_back(a);
            if (da >= -eps) capPoints.push_back(a);
        }
        if ((da < -eps && db > eps) || (da > eps && db < -eps)) {
            const double t = da / (da - db);
            const Vec3 p = a + t * (b - a);
            out.push_back(p);
            capPoints.push_back(p);
        }
    }
    return out;
}

// Orders the cap cross-section points counter-clockwise about the plane
// normal so the new face winds outward.
Face buildCap(std::vector<Vec3>& pts, const HalfSpace& hs, double scale) {
    const double eps = 1e-9 * (1.0 + scale);
    std::vector<Vec3> unique;
    for (const auto& p : pts) {
        bool dup = false;
        for (const auto& q : unique)
            if ((p - q).norm() < eps) {
                dup = true;
                break;
            }
        if (!dup) unique.push_back(p);
    }
    if (unique.size() < 3) return {};

    Vec3 centroid = Vec3::Zero();
    for (const auto& p : unique) centroid += p;
    centroid /= static_cast<double>(unique.size());

    Vec3 u = hs.n.unitOrthogonal();
    Vec3 v = hs.n.cross(u);  // (u, v, n) right-handed: ccw about n winds outward
    std::sort(unique.begin(), unique.end(), [&](const Vec3& a, const Vec3& b) {
        const Vec3 da = a - centroid, db = b - centroid;
        return std::atan2(da.dot(v), da.dot(u)) < std::atan2(db.dot(v), db.dot(u));
    });
    return unique;
}

// Signed volume of a closed, outward-wound face set (divergence theorem).
double faceSetVolume(const std::vector<Face>& faces) {
    double six = 0.0;
    for (const auto& f : faces) {
        for (std::size_t i = 1; i + 1 < f.size(); ++i)
            six += f[0].dot(f[i].cross(f[i + 1]));
    }
    return six / 6.0;
}

double intersectionVolumeGeneral(const Box3D& a, const Box3D& b) {
    std::vector<Face> faces = boxFaces(a);
    const double scale = a.dims.norm() + b.dims.norm() + (a.center - b.center).norm();
    const double eps = 1e-12 * (1.0 + scale);
    for (const HalfSpace& hs : boxHalfSpaces(b)) {
        bool anyOutside = false;
        for (const auto& f : faces)
            for (const auto& v : f)
                if (hs.n.dot(v) - hs.d > eps) anyOutside = true;
        if (!anyOutside) continue;  // half-space does not cut the polytope

        std::vector<Face> next;
        std::vector<Vec3> capPoints;
        for (const auto& f : faces) {
            Face c = clipFace(f, hs, eps, capPoints);
            if (c.size() >= 3 && polygonArea(c) >= kMinFaceArea) next.push_back(std::move(c));
        }
        Face cap = buildCap(capPoints, hs, scale);
        if (cap.size() >= 3 && polygonArea(cap) >= kMinFaceArea) next.push_back(std::move(cap));
        faces = std::move(next);
        if (faces.empty()) return 0.0;
    }
    return std::max(0.0, faceSetVolume(faces));
}

// 2D convex clip in the XZ footprint plane.
using Pt2 = std::array<double, 2>;

std::vector<Pt2> footprint(const Box3D& box) {
    const double ca = std::cos(box.rot.upAxisAngle());
    const double sa = std::sin(box.rot.upAxisAngle());
    const double hw = box.dims.x() / 2.0, hl = box.dims.z() / 2.0;
    std::vector<Pt2> pts;
    // Ry maps local (x, z) to (c x + s z, -s x + c z); ccw order in the plane.
    for (auto [lx, lz] : {std::pair{-hw, -hl}, {hw, -hl}, {hw, hl}, {-hw, hl}}) {
        pts.push_back({box.center.x() + ca * lx + sa * lz, box.center.z() - sa * lx + ca * lz});
    }
    return pts;
}

double polygonArea2d(const std::vector<Pt2>& poly) {
    double s = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const auto& p = poly[i];
        const auto& q = poly[(i + 1) % poly.size()];
        s += p[0] * q[1] - q[0] * p[1];
    }
    return std::abs(s) / 2.0;
}

std::vector<Pt2> clipPolygon2d(std::vector<Pt2> subject, const std::vector<Pt2>& clip) {
    // Clip polygon must be convex; orientation handled via signed test.
    const double orient = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < clip.size(); ++i) {
            const auto& p = clip[i];
            const auto& q = clip[(i + 1) % clip.size()];
            s += p[0] * q[1] - q[0] * p[1];
        }
        return s >= 0 ? 1.0 : -1.0;
    }();
    for (std::size_t i = 0; i < clip.size() && !subject.empty(); ++i) {
        const Pt2 a = clip[i];
        const Pt2 b = clip[(i + 1) % clip.size()];
        auto side = [&](const Pt2& p) {
            return orient * ((b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]));
        };
        std::vector<Pt2> out;
        for (std::size_t j = 0; j < subject.size(); ++j) {
            const Pt2& p = subject[j];
            const Pt2& q = subject[(j + 1) % subject.size()];
            const double sp = side(p), sq = side(q);
            if (sp >= 0) out.push_back(p);
            if ((sp > 0 && sq < 0) || (sp < 0 && sq > 0)) {
                const double t = sp / (sp - sq);
                out.push_back({p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])});
            }
        }
        subject = std::move(out);
    }
    return subject;
}

double intersectionVolumeYawFast(const Box3D& a, const Box3D& b) {
    const double yLo = std::max(a.center.y() - a.dims.y() / 2.0, b.center.y() - b.dims.y() / 2.0);
    const double yHi = std::min(a.center.y() + a.dims.y() / 2.0, b.center.y() + b.dims.y() / 2.0);
    if (yHi <= yLo) return 0.0;
    const std::vector<Pt2> inter = clipPolygon2d(footprint(a), footprint(b));
    if (inter.size() < 3) return 0.0;
    return polygonArea2d(inter) * (yHi - yLo);
}

}  // namespace

bool pointInBox(const Eigen::Vector3d& p, const Box3D& box) {
    const Eigen::Vector3d local = box.rot.matrix().transpose() * (p - box.center);
    return std::abs(local.x()) <= box.dims.x() / 2.0 && std::abs(local.y()) <= box.dims.y() / 2.0 &&
           std::abs(local.z()) <= box.dims.z() / 2.0;
}

double iou3dExact(const Box3D& a, const Box3D& b, Iou3dPath path) {
    const double va = a.volume(), vb = b.volume();
    if (!(va > 0) || !(vb > 0)) throw std::invalid_argument("iou3dExact: box volume must be > 0");

    double inter;
    const bool yawOk = a.rot.isUpAxisOnly() && b.rot.isUpAxisOnly();
    if (path == Iou3dPath::YawFast || (path == Iou3dPath::Auto && yawOk)) {
        if (!yawOk) throw std::invalid_argument("iou3dExact: yaw fast path needs up-axis boxes");
        inter = intersectionVolumeYawFast(a, b);
    } else {
        inter = intersectionVolumeGeneral(a, b);
    }
    inter = std::clamp(inter, 0.0, std::min(va, vb));  // absorb clipping round-off
    return std::clamp(inter / (va + vb - inter), 0.0, 1.0);
}

double iou3dOracle(const Box3D& a, const Box3D& b, std::uint64_t samples, std::uint64_t seed) {
    if (samples < 1) throw std::invalid_argument("iou3dOracle: samples must be >= 1");
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());
    for (const auto& box : {a, b})
        for (const auto& c : box.corners()) {
            lo = lo.cwiseMin(c);
            hi = hi.cwiseMax(c);
        }

    // Precompute rotations transposed for the membership test.
    const Eigen::Matrix3d rat = a.rot.matrix().transpose();
    const Eigen::Matrix3d rbt = b.rot.matrix().transpose();
    const Vec3 ha = a.dims / 2.0, hb = b.dims / 2.0;

    Rng rng(seed);
    std::uint64_t nBoth = 0, nUnion = 0;
    for (std::uint64_t i = 0; i < samples; ++i) {
        const Vec3 p(lo.x() + (hi.x() - lo.x()) * rng.uniform01(),
                     lo.y() + (hi.y() - lo.y()) * rng.uniform01(),
                     lo.z() + (hi.z() - lo.z()) * rng.uniform01());
        const Vec3 la = rat * (p - a.center);
        const Vec3 lb = rbt * (p - b.center);
        const bool inA = std::abs(la.x()) <= ha.x() && std::abs(la.y()) <= ha.y() &&
                         std::abs(la.z()) <= ha.z();
        const bool inB = std::abs(lb.x()) <= hb.x() && std::abs(lb.y()) <= hb.y() &&
                         std::abs(lb.z()) <= hb.z();
        if (inA && inB) ++nBoth;
        if (inA || inB) ++nUnion;
    }
    if (nUnion == 0) return 0.0;
    return static_cast<double>(nBoth) / static_cast<double>(nUnion);
}

double rectIou(const PixelRect& a, const PixelRect& b) {
    const double inter = rectArea(rectIntersect(a, b));
    const double uni = rectArea(a) + rectArea(b) - inter;
    if (uni <= 0) return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

double iou2d(const Box2D& a, const Box2D& b) { return rectIou(a.pixel, b.pixel); }

}  // namespace cos3d

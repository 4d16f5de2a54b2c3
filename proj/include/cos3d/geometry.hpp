#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace cos3d {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kDefaultZNear = 1e-3;  // meters

// Wrap an angle into [-pi, pi).
double wrapAngle(double a);

// ---------------------------------------------------------------------------
// Camera intrinsics: pinhole matrix K plus image size.
// ---------------------------------------------------------------------------
struct CameraIntrinsics {
    double fx = 0, fy = 0;  // focal lengths, pixels
    double cx = 0, cy = 0;  // principal point, pixels
    int width = 0, height = 0;

    // Throws std::invalid_argument on fx/fy <= 0 or width/height < 1.
    void validate() const;
    // Soft band: principal point outside [0,w]x[0,h] is suspicious but legal.
    bool principalPointInBounds() const;

    Eigen::Matrix3d matrixK() const;
};

// ---------------------------------------------------------------------------
// Rotation: 3x3 special-orthogonal matrix with the redundant views used by
// the token codec (ZYX euler angles, their [0,1] rescaling, and unit-mapped
// sine/cosine values).
// ---------------------------------------------------------------------------
class Rotation {
  public:
    Rotation() : m_(Eigen::Matrix3d::Identity()) {}

    static Rotation identity() { return Rotation(); }

    // Throws std::invalid_argument on non-finite input.
    static Rotation fromEulerZYX(double az, double ay, double ax);
    static Rotation fromEulerZYX(const std::array<double, 3>& zyx) {
        return fromEulerZYX(zyx[0], zyx[1], zyx[2]);
    }

    // Validates orthonormality and det=+1 within tol; throws otherwise.
    static Rotation fromMatrix(const Eigen::Matrix3d& m, double tol = 1e-6);

    // Nearest rotation to an arbitrary matrix (for ingesting rounded data).
    static Rotation orthonormalized(const Eigen::Matrix3d& m);

    // Rotation about the camera vertical axis (+Y); "yaw" in upright scenes.
    static Rotation fromUpAxisAngle(double angle);

    const Eigen::Matrix3d& matrix() const { return m_; }

    // ZYX euler angles (az, ay, ax), each in [-pi, pi).
    // At gimbal lock (|ay| = pi/2) az is fixed to 0 and ax absorbs the rest.
    std::array<double, 3> eulerZYX() const;

    // eulerZYX mapped through a -> (a + pi) / (2 pi), values in [0, 1).
    std::array<double, 3> eulerUnit() const;

    // [sin az, sin ay, sin ax, cos az, cos ay, cos ax] mapped from [-1,1]
    // to [0,1].
    std::array<double, 6> sinCosUnit() const;

    // Up-axis (+Y) rotation angle in [-pi, pi); exact for pure up-axis
    // rotations, a projection otherwise.
    double upAxisAngle() const;

    bool isUpAxisOnly(double tol = 1e-9) const;

  private:
    explicit Rotation(const Eigen::Matrix3d& m) : m_(m) {}
    Eigen::Matrix3d m_;
};

// Inverse unit maps used when decoding serialized rotations.
double angleFromUnit(double u);
double unitFromAngle(double a);
double angleFromSinCosUnit(double sinUnit, double cosUnit);

// ---------------------------------------------------------------------------
// Boxes.
// ---------------------------------------------------------------------------

// Oriented 3D box in the camera frame (+Z forward, +Y down): center t in
// meters, dims (W,H,L) along the local (x,y,z) axes, rotation R.
struct Box3D {
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    Eigen::Vector3d dims = Eigen::Vector3d::Zero();  // (W, H, L), meters
    Rotation rot;

    double volume() const { return dims.x() * dims.y() * dims.z(); }
    std::array<Eigen::Vector3d, 8> corners() const;
};

// Axis-aligned rectangle (xmin, ymin, xmax, ymax).
using PixelRect = std::array<double, 4>;
using NormRect = std::array<int, 4>;

double rectArea(const PixelRect& r);
PixelRect rectIntersect(const PixelRect& a, const PixelRect& b);

// 2D box carrying both the pixel rectangle and its [0,1000] integer
// normalization.
struct Box2D {
    PixelRect pixel{0, 0, 0, 0};
    NormRect norm{0, 0, 0, 0};

    // Builds norm from pixel: round half away from zero, clamp to [0,1000].
    static Box2D fromPixel(const PixelRect& px, const CameraIntrinsics& cam);
    // Builds pixel from norm (affine inverse, no rounding).
    static Box2D fromNorm(const NormRect& nm, const CameraIntrinsics& cam);
    // Both views supplied verbatim (canonical re-ingestion).
    static Box2D fromViews(const PixelRect& px, const NormRect& nm);
};

NormRect quantizeRect(const PixelRect& px, const CameraIntrinsics& cam);
PixelRect dequantizeRect(const NormRect& nm, const CameraIntrinsics& cam);

// ---------------------------------------------------------------------------
// Projection and frustum estimates.
// ---------------------------------------------------------------------------

enum class FrustumStatus { Inside, PartiallyOutside, FullyOutside, BehindCamera };

struct ProjectedBox {
    Box2D box;            // hull clipped to the image rectangle
    PixelRect unclipped;  // raw axis-aligned hull of the projected corners
};

// Projects the 8 corners (u = fx X/Z + cx, v = fy Y/Z + cy), takes the
// axis-aligned hull and clips it to the image. Corners at Z <= zNear are
// pushed onto the zNear plane along the optical axis to avoid sign flips.
// Throws BehindCameraError when no corner has Z > zNear.
ProjectedBox projectBox(const Box3D& box, const CameraIntrinsics& cam,
                        double zNear = kDefaultZNear);

struct BehindCameraError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

FrustumStatus frustumStatus(const Box3D& box, const CameraIntrinsics& cam,
                            double zNear = kDefaultZNear);

// 1 - clippedArea/unclippedArea; 0 when the unclipped hull is degenerate.
double truncationEstimate(const Box3D& box, const CameraIntrinsics& cam,
                          double zNear = kDefaultZNear);

enum class DepthConvention { CenterZ, EuclideanNorm };

double depthOf(const Box3D& box, DepthConvention conv = DepthConvention::CenterZ);

// Fraction of the target's 2D box area not covered by the union of the 2D
// boxes of strictly nearer occluders. Exact rectangle-union via coordinate
// sweep. A zero-area target counts as fully visible.
struct InstanceFootprint {
    PixelRect rect;
    double depth;
};
double visibilityEstimate(const InstanceFootprint& target,
                          std::span<const InstanceFootprint> occluders);

// Area of the union of rectangles, restricted to `window`.
double rectUnionAreaInWindow(std::span<const PixelRect> rects, const PixelRect& window);

}  // namespace cos3d

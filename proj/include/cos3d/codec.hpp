#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cos3d/geometry.hpp"

namespace cos3d::codec {

inline constexpr const char* kNoObjectSentinel = "<no_object/>";

// ---------------------------------------------------------------------------
// Serialization policy axes. Defaults reproduce the training layout:
// near-to-far, 2D-then-3D, center/size/rotation, interleaved, euler-unit.
// ---------------------------------------------------------------------------
enum class InterObjectOrder { NearToFar, LeftToRight, Random };
enum class Factorization { TwoDThenThreeD, ThreeDThenTwoD, ThreeDOnly };
enum class Intra3DOrder { CenterSizeRotation, CenterRotationSize, RotationSizeCenter };
enum class Layout { Interleaved, Clustered };
enum class RotationFormat { EulerUnit, SinCosUnit, YawOnly };

struct SerializationPolicy {
    InterObjectOrder order = InterObjectOrder::NearToFar;
    Factorization factorization = Factorization::TwoDThenThreeD;
    Intra3DOrder intra3d = Intra3DOrder::CenterSizeRotation;
    Layout layout = Layout::Interleaved;
    RotationFormat rotation = RotationFormat::EulerUnit;
    std::uint64_t randomSeed = 0;  // used only by InterObjectOrder::Random

    int rotationArity() const {
        return rotation == RotationFormat::EulerUnit  ? 3
               : rotation == RotationFormat::SinCosUnit ? 6
                                                        : 1;
    }
    int box3dArity() const { return 6 + rotationArity(); }

    // Compact token form, e.g. "near_to_far,2d3d,csr,interleaved,euler".
    std::string toString() const;
    static SerializationPolicy parse(const std::string& spec);
};

// ---------------------------------------------------------------------------
// Scene-side input and decoded output.
// ---------------------------------------------------------------------------
struct SceneInstance {
    Box3D box3d;
    Box2D box2d;
    double depth = 0;
};

enum class Terminal { EndOfSequence, NoObject };

struct CosInstance {
    std::optional<NormRect> box2dNorm;       // absent under ThreeDOnly
    std::optional<PixelRect> box2dPixel;     // filled when intrinsics are given
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    Eigen::Vector3d dims = Eigen::Vector3d::Zero();
    Rotation rotation;
    std::vector<double> rotationRaw;         // unit-space values as parsed
};

struct CosSequence {
    std::vector<CosInstance> instances;
    Terminal terminal = Terminal::EndOfSequence;
};

struct ParseDiagnostic {
    std::size_t offset = 0;   // byte offset into the input text
    std::string expected;     // what the grammar wanted here
    std::string message;
};

class CosParseError : public std::runtime_error {
  public:
    CosParseError(std::size_t offset, std::string expected, const std::string& message)
        : std::runtime_error(message + " (offset " + std::to_string(offset) + ", expected " +
                             expected + ")"),
          offset_(offset),
          expected_(std::move(expected)) {}
    std::size_t offset() const { return offset_; }
    const std::string& expected() const { return expected_; }

  private:
    std::size_t offset_;
    std::string expected_;
};

enum class DecodeMode { Strict, Recover };

struct DecodeResult {
    CosSequence sequence;
    std::vector<ParseDiagnostic> diagnostics;  // Recover-mode skip reports
};

// ---------------------------------------------------------------------------
// Operations.
// ---------------------------------------------------------------------------

// Renders the scene as the interleaved token text. Instances are ordered by
// the policy; the empty scene renders the sentinel. Throws
// std::invalid_argument on non-finite fields.
std::string encodeScene(std::span<const SceneInstance> instances,
                        const SerializationPolicy& policy, const CameraIntrinsics& cam);

// Applies the policy's inter-object ordering; exposed for tests and callers
// that need the order without rendering.
std::vector<std::size_t> orderIndices(std::span<const SceneInstance> instances,
                                      const SerializationPolicy& policy);

// Parses model output. Strict throws CosParseError at the first grammar
// violation; Recover skips malformed instances and reports them. When `cam`
// is provided, pixel boxes are de-normalized into the result.
DecodeResult decodeSequence(const std::string& text, const SerializationPolicy& policy,
                            DecodeMode mode, const CameraIntrinsics* cam = nullptr);

// [0,1000] quantization of a pixel rectangle and its affine inverse.
NormRect quantize2D(const PixelRect& pixelBox, const CameraIntrinsics& cam);
PixelRect dequantize2D(const NormRect& normBox, const CameraIntrinsics& cam);

// Renders one instance's 3D field list in policy order (test/packaging hook).
std::vector<double> box3dFieldValues(const Box3D& box, const SerializationPolicy& policy);

}  // namespace cos3d::codec

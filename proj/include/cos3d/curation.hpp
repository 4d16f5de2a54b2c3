#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cos3d/common.hpp"
#include "cos3d/geometry.hpp"

namespace cos3d::curation {

inline constexpr double kMinVisibility = 0.16;  // keep iff visibility > this
inline constexpr double kMaxTruncation = 0.84;  // keep iff truncation < this

struct SourceRef {
    std::string dataset;
    std::string instanceId;
};

// Redundant rotation parameterizations as they appear in the canonical file.
// Carried verbatim on re-ingestion so a normalize pass over its own output is
// byte-stable.
struct RotationViews {
    std::array<double, 9> matrix{};      // row-major
    std::array<double, 3> eulerUnit{};
    std::array<double, 6> sinCosUnit{};

    static RotationViews fromRotation(const Rotation& r);
};

struct InstanceRecord {
    std::string category;
    Box3D box3d;
    Box2D box2d;
    double depth = 0;
    std::optional<double> visibility;
    std::optional<double> truncation;
    bool estimated = false;  // visibility and/or truncation were estimated
    SourceRef source;
    std::optional<RotationViews> storedViews;  // set when re-ingesting canonical data
};

// One adapter output record: an image with its raw instances. box2d and the
// visibility/truncation metadata may be missing; prepareInstances fills them.
struct RawInstance {
    std::string category;
    Box3D box3d;
    std::optional<Box2D> box2d;
    std::optional<PixelRect> rawBox2dPixel;  // pixel-only source box, quantized later
    std::optional<double> visibility;
    std::optional<double> truncation;
    SourceRef source;
    std::optional<RotationViews> storedViews;
    std::optional<double> storedDepth;
    std::optional<bool> storedEstimated;
};

struct RawImage {
    std::string imagePath;
    CameraIntrinsics cam;
    std::vector<RawInstance> instances;
};

struct CanonicalLine {
    std::string imagePath;
    std::string category;
    CameraIntrinsics cam;
    std::vector<InstanceRecord> instances;  // non-decreasing depth

    std::string toJsonLine() const;
    static CanonicalLine fromJsonLine(std::string_view line);
};

// ---------------------------------------------------------------------------
// Adapters.
// ---------------------------------------------------------------------------
class Adapter {
  public:
    virtual ~Adapter() = default;
    // Streams image records in a deterministic source order. Per-file or
    // per-record problems go to `diag`; the stream continues past them.
    virtual void ingest(const std::string& sourcePath, const std::function<void(RawImage&&)>& fn,
                        const DiagnosticSink& diag) = 0;
};

// Throws std::invalid_argument for unknown names. Built-ins: "synthetic",
// "canonical", "kitti".
std::unique_ptr<Adapter> makeAdapter(const std::string& name);
std::vector<std::string> adapterNames();

// KITTI-style label line: type, truncated, occluded, alpha, bbox(l,t,r,b),
// dims(h,w,l), location(x,y,z = bottom center), rotation_y[, score].
// Exposed for tests and as the documented field mapping.
RawInstance kittiLabelLineToInstance(std::string_view line, const std::string& instanceId);

// Reads the width/height from a PNG header; nullopt when not a PNG.
std::optional<std::pair<int, int>> readPngSize(const std::string& path);

// ---------------------------------------------------------------------------
// Pipeline stages.
// ---------------------------------------------------------------------------

struct CurationOptions {
    DepthConvention depthConvention = DepthConvention::CenterZ;
    double zNear = kDefaultZNear;
};

// Materializes box2d, depth, and estimated visibility/truncation for every
// raw instance (estimation only where native metadata is absent).
std::vector<InstanceRecord> prepareInstances(const RawImage& image, const CurationOptions& opts);

enum class DropReason { BehindCamera, FullyOutside, LowVisibility, HighTruncation };
const char* dropReasonName(DropReason r);

struct DropRecord {
    InstanceRecord record;
    DropReason reason;
};

struct FilterResult {
    std::vector<InstanceRecord> kept;
    std::vector<DropRecord> dropped;  // exactly one reason per drop
};

FilterResult filterInstances(std::vector<InstanceRecord> records, const CameraIntrinsics& cam,
                             const CurationOptions& opts = {});

// Groups kept records by category (lines emitted in sorted category order)
// and depth-sorts each group; equal depths keep source order.
std::vector<CanonicalLine> buildCanonicalLines(const RawImage& imageMeta,
                                               std::vector<InstanceRecord> kept);

// Full Stage-I pass over one image.
std::vector<CanonicalLine> normalizeImage(const RawImage& image, const CurationOptions& opts,
                                          std::vector<DropRecord>* droppedOut = nullptr);

}  // namespace cos3d::curation

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cos3d/codec.hpp"
#include "cos3d/curation.hpp"
#include "cos3d/negatives.hpp"

namespace cos3d::packaging {

struct PromptBank {
    std::vector<std::string> detection;
    std::vector<std::string> groundingCategory;
    std::vector<std::string> groundingLocated;
    std::vector<std::string> pretrain2d;
    std::string pretrain2dNone;
    std::string annotationJob;

    static PromptBank fromJson(std::string_view jsonText);
    static const PromptBank& defaults();  // compiled-in copy of the data file
};

struct Turn {
    std::string from;   // "human" | "gpt"
    std::string value;
};

struct Conversation {
    std::string id;
    std::string image;
    std::vector<Turn> turns;

    std::string toJsonLine() const;
    static Conversation fromJsonLine(std::string_view line);
};

// Two-turn detection conversation; the response is the encoded scene.
Conversation packageDetection(const curation::CanonicalLine& line,
                              const codec::SerializationPolicy& policy, const PromptBank& bank,
                              std::uint64_t seed);

// Negative stub: same prompt family, sentinel response.
Conversation packageNegative(const negatives::NegativeStub& stub, const PromptBank& bank,
                             std::uint64_t seed);

enum class Horizontal { Left, Center, Right };
enum class DepthRange { Close, Medium, Far };
const char* horizontalName(Horizontal h);
const char* depthRangeName(DepthRange r);

struct SpatialQualifier {
    Horizontal horizontal;
    DepthRange range;
};

// Horizontal by 2D box center against image thirds; range against per-scene
// depth terciles (scenes with fewer than 3 instances fall back to a
// close/far median split; a single instance lands on far).
SpatialQualifier spatialQualifier(const curation::InstanceRecord& instance,
                                  const CameraIntrinsics& cam, std::span<const double> sceneDepths);

enum class GroundingMode { CategoryOnly, CategoryPlusLocation };

// Single-target grounding conversation; throws std::out_of_range on a bad
// target index.
Conversation packageGrounding(const curation::CanonicalLine& line, std::size_t targetIndex,
                              GroundingMode mode, const codec::SerializationPolicy& policy,
                              const PromptBank& bank, std::uint64_t seed);

// Job record for the external description-annotation service. The service
// call itself (and its uniqueness checks) happen elsewhere.
struct AnnotationJob {
    std::string image;
    PixelRect bboxPx;
    std::string category;
    std::string instructions;

    std::string toJsonLine() const;
};

AnnotationJob buildAnnotationJob(const curation::CanonicalLine& line, std::size_t targetIndex,
                                 const PromptBank& bank);

// 2D-only annotations for the pretraining stage.
struct Annotated2DImage {
    std::string image;
    CameraIntrinsics cam;
    // (category, pixel boxes) in source order
    std::vector<std::pair<std::string, std::vector<PixelRect>>> byCategory;
};

inline constexpr int kPretrainNegativeTurns = 10;

// Multi-turn dialogue: one turn per positive category plus up to 10 absent
// categories answered "None"; turn order is a seeded mix.
Conversation package2DPretraining(const Annotated2DImage& image,
                                  const std::vector<std::string>& vocabulary,
                                  const PromptBank& bank, std::uint64_t seed);

}  // namespace cos3d::packaging

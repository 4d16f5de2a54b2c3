#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cos3d/common.hpp"
#include "cos3d/geometry.hpp"

namespace cos3d::eval {

std::vector<double> defaultDetectionThresholds();  // 0.05, 0.10, ..., 0.50
std::vector<double> defaultGroundingThresholds();  // 0.15, 0.25, 0.50

enum class Protocol { TargetAware, FixedVocabulary };

// The autoregressive decoder emits no scores; emission order is the
// confidence proxy. UniformScore treats all predictions as tied (single
// PR point) for sensitivity checks.
enum class Confidence { EmissionOrder, UniformScore };

struct EvalConfig {
    std::vector<double> thresholds = defaultDetectionThresholds();
    Protocol protocol = Protocol::TargetAware;
    Confidence confidence = Confidence::EmissionOrder;

    void validate() const;  // thresholds strictly increasing, each in (0,1]
};

// One (image, category) ground-truth group.
struct GtRecord {
    std::string dataset;
    std::string imageId;
    std::string category;
    std::vector<Box3D> boxes;
};

// One (image, category) prediction group, boxes in emission order.
struct DetectionRecord {
    std::string dataset;
    std::string imageId;
    std::string category;
    std::vector<Box3D> predictions;
};

// Per-image prompt sets under the target-aware protocol; annotation-free
// images are skipped and reported.
std::map<std::string, std::set<std::string>> targetAwarePrompts(
    std::span<const GtRecord> groundTruth, std::vector<Diagnostic>* diagnostics = nullptr);

struct MatchOutcome {
    std::vector<bool> isTp;    // per prediction, emission order
    std::size_t unmatchedGt = 0;
};

// Emission-order greedy matching: each prediction takes the unmatched GT of
// maximal IoU when that IoU reaches tau; every GT matches at most once.
MatchOutcome matchGreedy(std::span<const Box3D> predictions, std::span<const Box3D> gts,
                         double tau);

// One ranked prediction entry for PR accumulation.
struct RankedFlag {
    long long rank = 0;  // emission index within its response
    bool isTp = false;
};

// All-point average precision: rank ascending (stable), monotone precision
// envelope, area under the curve. Returns nullopt when nGt is zero.
std::optional<double> averagePrecision(std::vector<RankedFlag> flags, std::size_t nGt,
                                       Confidence confidence = Confidence::EmissionOrder);

// AP at one threshold for one category over a split of records.
std::optional<double> apAtThreshold(std::span<const DetectionRecord> predictions,
                                    std::span<const GtRecord> gts, double tau,
                                    Confidence confidence = Confidence::EmissionOrder);

struct CategoryResult {
    std::map<double, double> apPerThreshold;
    double meanAp = 0;
};

struct DatasetReport {
    std::map<std::string, CategoryResult> categories;
    double meanAp = 0;
};

struct EvalReport {
    std::map<std::string, DatasetReport> datasets;
    double meanAp = 0;  // macro average over datasets
    std::vector<Diagnostic> diagnostics;

    std::string toJson() const;
    std::string toTable() const;  // aligned-columns text table
};

// Full sweep: AP per (category, tau), averaged over tau, then over
// categories per dataset, then macro-averaged overall. Categories without
// ground truth are reported as absent and excluded from the means.
EvalReport apSweep(std::span<const DetectionRecord> predictions, std::span<const GtRecord> gts,
                   const EvalConfig& config);

// ---------------------------------------------------------------------------
// Grounding metric: one predicted box per query, max IoU over the matching
// GT set, correctness counted per threshold.
// ---------------------------------------------------------------------------
struct GroundingQuery {
    std::string queryId;
    std::vector<Box3D> gtBoxes;          // all GT boxes matching the description
    std::optional<Box3D> prediction;     // empty = unparseable emission
};

struct GroundingReport {
    std::map<double, double> accuracyPerThreshold;
    double meanAp = 0;
    std::size_t queries = 0;
    std::vector<Diagnostic> diagnostics;

    std::string toJson() const;
};

GroundingReport groundingScore(std::span<const GroundingQuery> queries,
                               std::span<const double> thresholds);

}  // namespace cos3d::eval

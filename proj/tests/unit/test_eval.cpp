#include "cos3d/eval.hpp"

#include <algorithm>

#include "cos3d/iou3d.hpp"
#include "doctest.h"
#include "support/test_helpers.hpp"

using namespace cos3d;
using namespace cos3d::eval;

namespace {

Box3D cube(double x, double y, double z, double side = 1.0) {
    Box3D b;
    b.center = Eigen::Vector3d(x, y, z);
    b.dims = Eigen::Vector3d(side, side, side);
    return b;
}

// Offset along x producing IoU (1-d)/(1+d) against a unit cube at the origin.
Box3D cubeWithIou(double targetIou) {
    const double d = (1.0 - targetIou) / (1.0 + targetIou);
    return cube(d, 0, 0);
}

// Independent AP oracle: rerun greedy matching from scratch for every prefix
// of the globally ranked list and integrate the envelope by explicit max
// scans.
double apBruteForce(const std::vector<DetectionRecord>& preds, const std::vector<GtRecord>& gts,
                    double tau) {
    struct Entry {
        std::size_t record;
        std::size_t predIndex;
    };
    std::vector<Entry> ranked;
    for (std::size_t r = 0; r < preds.size(); ++r)
        for (std::size_t p = 0; p < preds[r].predictions.size(); ++p) ranked.push_back({r, p});
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const Entry& a, const Entry& b) { return a.predIndex < b.predIndex; });

    std::size_t nGt = 0;
    for (const auto& g : gts) nGt += g.boxes.size();
    if (nGt == 0 || ranked.empty()) return ranked.empty() && nGt > 0 ? 0.0 : -1.0;

    std::vector<double> precision, recall;
    for (std::size_t k = 1; k <= ranked.size(); ++k) {
        // Per-record emission prefixes implied by the global cut.
        std::map<std::size_t, std::size_t> take;
        for (std::size_t i = 0; i < k; ++i)
            take[ranked[i].record] = std::max(take[ranked[i].record], ranked[i].predIndex + 1);
        std::size_t tp = 0;
        for (const auto& [r, count] : take) {
            std::vector<Box3D> sub(preds[r].predictions.begin(),
                                   preds[r].predictions.begin() + static_cast<long>(count));
            const GtRecord* gt = nullptr;
            for (const auto& g : gts)
                if (g.imageId == preds[r].imageId && g.category == preds[r].category) gt = &g;
            const MatchOutcome m =
                matchGreedy(sub, gt ? std::span<const Box3D>(gt->boxes) : std::span<const Box3D>{},
                            tau);
            for (bool f : m.isTp)
                if (f) ++tp;
        }
        precision.push_back(static_cast<double>(tp) / static_cast<double>(k));
        recall.push_back(static_cast<double>(tp) / static_cast<double>(nGt));
    }
    double ap = 0.0;
    for (std::size_t i = 0; i < precision.size(); ++i) {
        const double prevR = i == 0 ? 0.0 : recall[i - 1];
        if (recall[i] <= prevR) continue;
        double maxP = 0.0;
        for (std::size_t j = i; j < precision.size(); ++j) maxP = std::max(maxP, precision[j]);
        ap += (recall[i] - prevR) * maxP;
    }
    return ap;
}

}  // namespace

TEST_SUITE_BEGIN("eval");

TEST_CASE("config validation") {
    EvalConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.thresholds = {0.5, 0.3};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.thresholds = {0.0, 0.5};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.thresholds = {};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    CHECK(defaultDetectionThresholds().size() == 10);
    CHECK(defaultGroundingThresholds() == std::vector<double>{0.15, 0.25, 0.50});
}

TEST_CASE("target-aware prompts") {
    std::vector<GtRecord> gt{
        {"ds", "img0", "car", {cube(0, 0, 5)}},
        {"ds", "img0", "pedestrian", {cube(2, 0, 6)}},
        {"ds", "img1", "chair", {cube(0, 0, 3), cube(1, 0, 4)}},
        {"ds", "img2", "car", {}},
    };
    std::vector<Diagnostic> diags;
    const auto prompts = targetAwarePrompts(gt, &diags);
    REQUIRE(prompts.count("img0"));
    CHECK(prompts.at("img0") == std::set<std::string>{"car", "pedestrian"});
    CHECK(prompts.at("img1") == std::set<std::string>{"chair"});
    CHECK_FALSE(prompts.count("img2"));  // empty image skipped
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].where == "img2");

    // Union over the split equals the GT category inventory.
    std::set<std::string> unionSet, inventory;
    for (const auto& [img, cats] : prompts) unionSet.insert(cats.begin(), cats.end());
    for (const auto& g : gt)
        if (!g.boxes.empty()) inventory.insert(g.category);
    CHECK(unionSet == inventory);
}

TEST_CASE("greedy matching examples") {
    const std::vector<Box3D> gt{cube(0, 0, 0)};

    SUBCASE("single confident prediction") {
        const std::vector<Box3D> preds{cubeWithIou(0.6)};
        const MatchOutcome m = matchGreedy(preds, gt, 0.5);
        REQUIRE(m.isTp.size() == 1);
        CHECK(m.isTp[0]);
        CHECK(m.unmatchedGt == 0);
    }
    SUBCASE("two predictions on one GT: first wins") {
        const std::vector<Box3D> preds{cubeWithIou(0.6), cubeWithIou(0.55)};
        const MatchOutcome m = matchGreedy(preds, gt, 0.5);
        CHECK(m.isTp[0]);
        CHECK_FALSE(m.isTp[1]);
    }
    SUBCASE("no predictions leaves all GT unmatched") {
        const MatchOutcome m = matchGreedy({}, std::vector<Box3D>{cube(0, 0, 0), cube(3, 0, 0)},
                                           0.5);
        CHECK(m.isTp.empty());
        CHECK(m.unmatchedGt == 2);
    }
}

TEST_CASE("ap fixtures") {
    const std::vector<GtRecord> gt{{"ds", "img0", "car", {cube(0, 0, 0)}}};

    SUBCASE("perfect single detection is 1.0 across the sweep") {
        const std::vector<DetectionRecord> preds{{"ds", "img0", "car", {cubeWithIou(0.6)}}};
        for (double tau : defaultDetectionThresholds()) {
            const auto ap = apAtThreshold(preds, gt, tau);
            REQUIRE(ap.has_value());
            CHECK(*ap == doctest::Approx(1.0));
        }
    }
    SUBCASE("IoU just above 0.25 splits the sweep in half") {
        const std::vector<DetectionRecord> preds{{"ds", "img0", "car", {cube(0.599, 0, 0)}}};
        double sum = 0;
        for (double tau : defaultDetectionThresholds()) sum += *apAtThreshold(preds, gt, tau);
        CHECK(sum / 10.0 == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("a late FP after full recall does not hurt the envelope") {
        const std::vector<DetectionRecord> preds{
            {"ds", "img0", "car", {cubeWithIou(0.6), cube(5, 0, 0)}}};
        const auto ap = apAtThreshold(preds, gt, 0.5);
        CHECK(*ap == doctest::Approx(1.0));
    }
    SUBCASE("no GT means undefined") {
        CHECK_FALSE(apAtThreshold({}, {}, 0.5).has_value());
    }
    SUBCASE("no predictions with GT present is 0") {
        CHECK(*apAtThreshold({}, gt, 0.5) == doctest::Approx(0.0));
    }
}

TEST_CASE("ap equals the brute-force oracle on small random cases") {
    Rng rng(220);
    for (int trial = 0; trial < 60; ++trial) {
        std::vector<GtRecord> gts;
        std::vector<DetectionRecord> preds;
        const int images = 1 + static_cast<int>(rng.below(3));
        for (int img = 0; img < images; ++img) {
            GtRecord g{"ds", "img" + std::to_string(img), "car", {}};
            const int nGt = static_cast<int>(rng.below(4));
            for (int k = 0; k < nGt; ++k)
                g.boxes.push_back(cube(rng.uniform(-3, 3), 0, rng.uniform(-3, 3)));
            if (!g.boxes.empty()) gts.push_back(g);

            DetectionRecord d{"ds", "img" + std::to_string(img), "car", {}};
            const int nPred = static_cast<int>(rng.below(5));
            for (int k = 0; k < nPred; ++k)
                d.predictions.push_back(cube(rng.uniform(-3, 3), 0, rng.uniform(-3, 3)));
            if (!d.predictions.empty()) preds.push_back(d);
        }
        std::size_t totalGt = 0;
        for (const auto& g : gts) totalGt += g.boxes.size();
        if (totalGt == 0) continue;

        for (double tau : {0.1, 0.3, 0.5}) {
            const auto ap = apAtThreshold(preds, gts, tau);
            const double oracle = apBruteForce(preds, gts, tau);
            REQUIRE(ap.has_value());
            CHECK(*ap == doctest::Approx(oracle).epsilon(1e-12));
        }
    }
}

TEST_CASE("ap is monotone non-increasing in tau") {
    Rng rng(515);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<GtRecord> gts{{"ds", "img", "car", {}}};
        std::vector<DetectionRecord> preds{{"ds", "img", "car", {}}};
        const int nGt = 1 + static_cast<int>(rng.below(6));
        for (int k = 0; k < nGt; ++k)
            gts[0].boxes.push_back(cube(rng.uniform(-4, 4), 0, rng.uniform(-4, 4)));
        const int nPred = static_cast<int>(rng.below(8));
        for (int k = 0; k < nPred; ++k)
            preds[0].predictions.push_back(
                cube(rng.uniform(-4, 4), rng.uniform(-0.3, 0.3), rng.uniform(-4, 4)));

        double prev = 1.0 + 1e-12;
        for (double tau : defaultDetectionThresholds()) {
            const double ap = apAtThreshold(preds, gts, tau).value();
            CHECK(ap <= prev + 1e-12);
            prev = ap;
        }
    }
}

TEST_CASE("removing a FP never decreases AP") {
    Rng rng(630);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<GtRecord> gts{{"ds", "img", "car", {}}};
        const int nGt = 1 + static_cast<int>(rng.below(4));
        for (int k = 0; k < nGt; ++k)
            gts[0].boxes.push_back(cube(rng.uniform(-4, 4), 0, rng.uniform(-4, 4)));
        std::vector<DetectionRecord> preds{{"ds", "img", "car", {}}};
        const int nPred = 1 + static_cast<int>(rng.below(6));
        for (int k = 0; k < nPred; ++k)
            preds[0].predictions.push_back(cube(rng.uniform(-4, 4), 0, rng.uniform(-4, 4)));

        const double tau = 0.3;
        const MatchOutcome m = matchGreedy(preds[0].predictions, gts[0].boxes, tau);
        std::size_t fpIndex = m.isTp.size();
        for (std::size_t i = 0; i < m.isTp.size(); ++i)
            if (!m.isTp[i]) fpIndex = i;
        if (fpIndex == m.isTp.size()) continue;  // no FP this trial

        const double before = apAtThreshold(preds, gts, tau).value();
        std::vector<DetectionRecord> fewer = preds;
        fewer[0].predictions.erase(fewer[0].predictions.begin() +
                                   static_cast<long>(fpIndex));
        if (fewer[0].predictions.empty()) fewer.clear();
        const double after = apAtThreshold(fewer, gts, tau).value();
        CHECK(after >= before - 1e-12);
    }
}

TEST_CASE("sweep aggregates per category, dataset, and overall") {
    const std::vector<GtRecord> gts{
        {"dsA", "img0", "car", {cube(0, 0, 0)}},
        {"dsA", "img1", "chair", {cube(0, 0, 0)}},
    };
    // car: perfect (mean 1.0); chair: IoU ~0.2508 (mean 0.5)
    const std::vector<DetectionRecord> preds{
        {"dsA", "img0", "car", {cubeWithIou(0.6)}},
        {"dsA", "img1", "chair", {cube(0.599, 0, 0)}},
    };
    EvalConfig cfg;
    const EvalReport report = apSweep(preds, gts, cfg);
    REQUIRE(report.datasets.count("dsA"));
    const DatasetReport& ds = report.datasets.at("dsA");
    CHECK(ds.categories.at("car").meanAp == doctest::Approx(1.0));
    CHECK(ds.categories.at("chair").meanAp == doctest::Approx(0.5));
    CHECK(ds.meanAp == doctest::Approx(0.75));
    CHECK(report.meanAp == doctest::Approx(0.75));

    SUBCASE("an empty category (GT but no predictions) contributes zero") {
        std::vector<GtRecord> gts2 = gts;
        gts2.push_back({"dsA", "img2", "table", {cube(0, 0, 0)}});
        const EvalReport r2 = apSweep(preds, gts2, cfg);
        CHECK(r2.datasets.at("dsA").categories.at("table").meanAp == doctest::Approx(0.0));
        CHECK(r2.datasets.at("dsA").meanAp == doctest::Approx(0.5));
    }
    SUBCASE("image order does not change the report") {
        std::vector<GtRecord> gtsShuffled{gts[1], gts[0]};
        std::vector<DetectionRecord> predsShuffled{preds[1], preds[0]};
        const EvalReport r2 = apSweep(predsShuffled, gtsShuffled, cfg);
        CHECK(r2.toJson() == report.toJson());
    }
    SUBCASE("rigid transforms leave the report unchanged") {
        Rng rng(808);
        const Rotation q = testing::randomRotation(rng);
        const Eigen::Vector3d t(1.5, -2.0, 3.0);
        auto moved = [&](std::vector<Box3D> boxes) {
            for (Box3D& b : boxes) {
                b.center = q.matrix() * b.center + t;
                b.rot = Rotation::fromMatrix(q.matrix() * b.rot.matrix(), 1e-7);
            }
            return boxes;
        };
        std::vector<GtRecord> gts2 = gts;
        std::vector<DetectionRecord> preds2 = preds;
        for (auto& g : gts2) g.boxes = moved(g.boxes);
        for (auto& p : preds2) p.predictions = moved(p.predictions);
        const EvalReport r2 = apSweep(preds2, gts2, cfg);
        CHECK(r2.datasets.at("dsA").categories.at("car").meanAp == doctest::Approx(1.0));
        CHECK(r2.datasets.at("dsA").categories.at("chair").meanAp == doctest::Approx(0.5));
    }
}

TEST_CASE("uniform-score mode collapses to a single PR point") {
    const std::vector<GtRecord> gt{{"ds", "img0", "car", {cube(0, 0, 0), cube(5, 0, 0)}}};
    const std::vector<DetectionRecord> preds{
        {"ds", "img0", "car", {cubeWithIou(0.6), cube(20, 0, 0)}}};
    // 1 TP of 2 preds, 1 of 2 GT recalled: AP = 0.5 * 0.5
    const auto ap = apAtThreshold(preds, gt, 0.5, Confidence::UniformScore);
    CHECK(*ap == doctest::Approx(0.25));
}

TEST_CASE("grounding score fixtures") {
    const std::vector<double> thresholds = defaultGroundingThresholds();

    SUBCASE("IoU 0.3 scores two of three thresholds") {
        const GroundingQuery q{"q0", {cube(0, 0, 0)}, cubeWithIou(0.3)};
        const GroundingReport r = groundingScore(std::vector{q}, thresholds);
        CHECK(r.meanAp == doctest::Approx(2.0 / 3.0));
    }
    SUBCASE("max IoU over the matching set") {
        // Prediction IoUs against the two GT boxes: 0.1 and 0.6.
        const GroundingQuery q{"q0", {cubeWithIou(0.1), cubeWithIou(0.6)}, cube(0, 0, 0)};
        const GroundingReport r = groundingScore(std::vector{q}, thresholds);
        CHECK(r.accuracyPerThreshold.at(0.50) == doctest::Approx(1.0));
        CHECK(r.meanAp == doctest::Approx(1.0));
    }
    SUBCASE("unparseable prediction counts zero and is reported") {
        const GroundingQuery q{"q0", {cube(0, 0, 0)}, std::nullopt};
        const GroundingReport r = groundingScore(std::vector{q}, thresholds);
        CHECK(r.meanAp == doctest::Approx(0.0));
        CHECK(!r.diagnostics.empty());
    }
    SUBCASE("accuracies average over queries per threshold") {
        const std::vector<GroundingQuery> qs{
            {"q0", {cube(0, 0, 0)}, cubeWithIou(0.3)},
            {"q1", {cube(0, 0, 0)}, cubeWithIou(0.6)},
        };
        const GroundingReport r = groundingScore(qs, thresholds);
        CHECK(r.accuracyPerThreshold.at(0.15) == doctest::Approx(1.0));
        CHECK(r.accuracyPerThreshold.at(0.25) == doctest::Approx(1.0));
        CHECK(r.accuracyPerThreshold.at(0.50) == doctest::Approx(0.5));
        CHECK(r.meanAp == doctest::Approx((1.0 + 1.0 + 0.5) / 3.0));
    }
}

TEST_SUITE_END();

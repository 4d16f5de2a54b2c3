#include "cos3d/eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "cos3d/iou3d.hpp"

namespace cos3d::eval {

std::vector<double> defaultDetectionThresholds() {
    std::vector<double> t;
    for (int k = 1; k <= 10; ++k) t.push_back(k * 0.05);
    return t;
}

std::vector<double> defaultGroundingThresholds() { return {0.15, 0.25, 0.50}; }

void EvalConfig::validate() const {
    if (thresholds.empty()) throw std::invalid_argument("eval: empty threshold list");
    double prev = 0.0;
    for (double t : thresholds) {
        if (!(t > 0.0) || !(t <= 1.0))
            throw std::invalid_argument("eval: thresholds must lie in (0,1]");
        if (!(t > prev)) throw std::invalid_argument("eval: thresholds must strictly increase");
        prev = t;
    }
}

std::map<std::string, std::set<std::string>> targetAwarePrompts(
    std::span<const GtRecord> groundTruth, std::vector<Diagnostic>* diagnostics) {
    std::map<std::string, std::set<std::string>> prompts;
    for (const GtRecord& g : groundTruth) {
        if (g.boxes.empty()) continue;
        prompts[g.imageId].insert(g.category);
    }
    if (diagnostics) {
        std::set<std::string> seen;
        for (const GtRecord& g : groundTruth) {
            if (!g.boxes.empty() || seen.count(g.imageId)) continue;
            if (!prompts.count(g.imageId)) {
                diagnostics->push_back(
                    {"warning", g.imageId, "image has no annotations; skipped from prompts"});
                seen.insert(g.imageId);
            }
        }
    }
    return prompts;
}

MatchOutcome matchGreedy(std::span<const Box3D> predictions, std::span<const Box3D> gts,
                         double tau) {
    MatchOutcome out;
    out.isTp.assign(predictions.size(), false);
    std::vector<bool> gtTaken(gts.size(), false);
    for (std::size_t p = 0; p < predictions.size(); ++p) {
        double bestIou = -1.0;
        std::size_t bestG = gts.size();
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (gtTaken[g]) continue;
            const double iou = iou3dExact(predictions[p], gts[g]);
            if (iou > bestIou) {
                bestIou = iou;
                bestG = g;
            }
        }
        if (bestG < gts.size() && bestIou >= tau) {
            out.isTp[p] = true;
            gtTaken[bestG] = true;
        }
    }
    out.unmatchedGt = 0;
    for (bool taken : gtTaken)
        if (!taken) ++out.unmatchedGt;
    return out;
}

std::optional<double> averagePrecision(std::vector<RankedFlag> flags, std::size_t nGt,
                                       Confidence confidence) {
    if (nGt == 0) return std::nullopt;
    if (flags.empty()) return 0.0;

    if (confidence == Confidence::UniformScore) {
        // All predictions tied: a single PR point; envelope area = P * R.
        std::size_t tp = 0;
        for (const RankedFlag& f : flags)
            if (f.isTp) ++tp;
        const double precision = static_cast<double>(tp) / static_cast<double>(flags.size());
        const double recall = static_cast<double>(tp) / static_cast<double>(nGt);
        return precision * recall;
    }

    std::stable_sort(flags.begin(), flags.end(),
                     [](const RankedFlag& a, const RankedFlag& b) { return a.rank < b.rank; });

    std::vector<double> precision(flags.size()), recall(flags.size());
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < flags.size(); ++i) {
        flags[i].isTp ? ++tp : ++fp;
        precision[i] = static_cast<double>(tp) / static_cast<double>(tp + fp);
        recall[i] = static_cast<double>(tp) / static_cast<double>(nGt);
    }
    // Monotone envelope from the right, then area under the curve.
    for (std::size_t i = flags.size() - 1; i > 0; --i)
        precision[i - 1] = std::max(precision[i - 1], precision[i]);
    double ap = 0.0, prevRecall = 0.0;
    for (std::size_t i = 0; i < flags.size(); ++i) {
        ap += (recall[i] - prevRecall) * precision[i];
        prevRecall = recall[i];
    }
    return ap;
}

namespace {

struct GroupKey {
    std::string imageId;
    std::string category;
    bool operator<(const GroupKey& o) const {
        return imageId != o.imageId ? imageId < o.imageId : category < o.category;
    }
};

}  // namespace

std::optional<double> apAtThreshold(std::span<const DetectionRecord> predictions,
                                    std::span<const GtRecord> gts, double tau,
                                    Confidence confidence) {
    std::map<GroupKey, const GtRecord*> gtByKey;
    std::size_t nGt = 0;
    for (const GtRecord& g : gts) {
        gtByKey[{g.imageId, g.category}] = &g;
        nGt += g.boxes.size();
    }
    std::vector<RankedFlag> flags;
    for (const DetectionRecord& d : predictions) {
        const auto it = gtByKey.find({d.imageId, d.category});
        static const std::vector<Box3D> kNone;
        const std::vector<Box3D>& gtBoxes = it == gtByKey.end() ? kNone : it->second->boxes;
        const MatchOutcome m = matchGreedy(d.predictions, gtBoxes, tau);
        for (std::size_t i = 0; i < d.predictions.size(); ++i)
            flags.push_back({static_cast<long long>(i), m.isTp[i]});
    }
    return averagePrecision(std::move(flags), nGt, confidence);
}

EvalReport apSweep(std::span<const DetectionRecord> predictions, std::span<const GtRecord> gts,
                   const EvalConfig& config) {
    config.validate();
    EvalReport report;

    // dataset -> category -> records
    std::map<std::string, std::map<std::string, std::vector<const GtRecord*>>> gtGroups;
    std::map<std::string, std::map<std::string, std::vector<const DetectionRecord*>>> predGroups;
    for (const GtRecord& g : gts) gtGroups[g.dataset][g.category].push_back(&g);
    for (const DetectionRecord& d : predictions) {
        if (!gtGroups.count(d.dataset) || !gtGroups[d.dataset].count(d.category)) {
            report.diagnostics.push_back(
                {"warning", d.dataset + "/" + d.imageId + "/" + d.category,
                 "predictions name a category with no ground truth; AP undefined, skipped"});
            continue;
        }
        predGroups[d.dataset][d.category].push_back(&d);
    }

    double datasetSum = 0.0;
    std::size_t datasetCount = 0;
    for (const auto& [dataset, categories] : gtGroups) {
        DatasetReport ds;
        double categorySum = 0.0;
        std::size_t categoryCount = 0;
        for (const auto& [category, gtRecs] : categories) {
            std::vector<GtRecord> gtOwned;
            for (const GtRecord* g : gtRecs) gtOwned.push_back(*g);
            std::size_t nGt = 0;
            for (const GtRecord& g : gtOwned) nGt += g.boxes.size();
            if (nGt == 0) {
                report.diagnostics.push_back({"warning", dataset + "/" + category,
                                              "category has no ground-truth instances; skipped"});
                continue;
            }
            std::vector<DetectionRecord> predOwned;
            if (predGroups.count(dataset) && predGroups[dataset].count(category))
                for (const DetectionRecord* d : predGroups[dataset][category])
                    predOwned.push_back(*d);

            CategoryResult result;
            double sum = 0.0;
            for (double tau : config.thresholds) {
                const auto ap = apAtThreshold(predOwned, gtOwned, tau, config.confidence);
                result.apPerThreshold[tau] = ap.value_or(0.0);
                sum += ap.value_or(0.0);
            }
            result.meanAp = sum / static_cast<double>(config.thresholds.size());
            categorySum += result.meanAp;
            ++categoryCount;
            ds.categories[category] = std::move(result);
        }
        if (categoryCount == 0) continue;
        ds.meanAp = categorySum / static_cast<double>(categoryCount);
        datasetSum += ds.meanAp;
        ++datasetCount;
        report.datasets[dataset] = std::move(ds);
    }
    report.meanAp = datasetCount ? datasetSum / static_cast<double>(datasetCount) : 0.0;
    return report;
}

namespace {

std::string jsonNumber(double v) {
    std::ostringstream ss;
    ss.precision(12);
    ss << v;
    return ss.str();
}

}  // namespace

std::string EvalReport::toJson() const {
    std::string out = "{\"mean_ap\":" + jsonNumber(meanAp) + ",\"datasets\":{";
    bool firstDs = true;
    for (const auto& [dataset, ds] : datasets) {
        if (!firstDs) out += ',';
        firstDs = false;
        out += "\"" + jsonEscape(dataset) + "\":{\"mean_ap\":" + jsonNumber(ds.meanAp) +
               ",\"categories\":{";
        bool firstCat = true;
        for (const auto& [category, res] : ds.categories) {
            if (!firstCat) out += ',';
            firstCat = false;
            out += "\"" + jsonEscape(category) + "\":{\"ap\":" + jsonNumber(res.meanAp) +
                   ",\"per_threshold\":{";
            bool firstT = true;
            for (const auto& [tau, ap] : res.apPerThreshold) {
                if (!firstT) out += ',';
                firstT = false;
                out += "\"" + fixed2(tau) + "\":" + jsonNumber(ap);
            }
            out += "}}";
        }
        out += "}}";
    }
    out += "}}";
    return out;
}

std::string EvalReport::toTable() const {
    std::ostringstream ss;
    ss << "dataset                 category                mean AP\n";
    ss << "------------------------------------------------------\n";
    for (const auto& [dataset, ds] : datasets) {
        for (const auto& [category, res] : ds.categories) {
            ss << dataset;
            for (std::size_t i = dataset.size(); i < 24; ++i) ss << ' ';
            ss << category;
            for (std::size_t i = category.size(); i < 24; ++i) ss << ' ';
            ss << fixed2(res.meanAp) << "\n";
        }
        ss << dataset;
        for (std::size_t i = dataset.size(); i < 24; ++i) ss << ' ';
        ss << "(mean)                  " << fixed2(ds.meanAp) << "\n";
    }
    ss << "overall mean AP: " << fixed2(meanAp) << "\n";
    return ss.str();
}

GroundingReport groundingScore(std::span<const GroundingQuery> queries,
                               std::span<const double> thresholds) {
    if (thresholds.empty()) throw std::invalid_argument("groundingScore: empty threshold list");
    GroundingReport report;
    report.queries = queries.size();
    if (queries.empty()) return report;

    std::map<double, std::size_t> correct;
    for (double t : thresholds) correct[t] = 0;

    for (const GroundingQuery& q : queries) {
        double maxIou = 0.0;
        if (!q.prediction) {
            report.diagnostics.push_back(
                {"warning", q.queryId, "prediction unparseable; counted incorrect"});
        } else if (q.gtBoxes.empty()) {
            report.diagnostics.push_back({"warning", q.queryId, "query has no GT boxes"});
        } else {
            for (const Box3D& gt : q.gtBoxes)
                maxIou = std::max(maxIou, iou3dExact(*q.prediction, gt));
        }
        for (double t : thresholds)
            if (maxIou >= t) ++correct[t];
    }

    double sum = 0.0;
    for (double t : thresholds) {
        const double acc = static_cast<double>(correct[t]) / static_cast<double>(queries.size());
        report.accuracyPerThreshold[t] = acc;
        sum += acc;
    }
    report.meanAp = sum / static_cast<double>(thresholds.size());
    return report;
}

std::string GroundingReport::toJson() const {
    std::string out = "{\"mean_ap\":" + jsonNumber(meanAp) +
                      ",\"queries\":" + std::to_string(queries) + ",\"per_threshold\":{";
    bool first = true;
    for (const auto& [tau, acc] : accuracyPerThreshold) {
        if (!first) out += ',';
        first = false;
        out += "\"" + fixed2(tau) + "\":" + jsonNumber(acc);
    }
    out += "}}";
    return out;
}

}  // namespace cos3d::eval

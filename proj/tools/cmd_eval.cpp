#include <filesystem>
#include <map>

#include "cli_common.hpp"
#include "cos3d/curation.hpp"
#include "cos3d/eval.hpp"
#include "json.hpp"

namespace cos3d::cli {

using nlohmann::json;

namespace {

std::vector<double> parseThresholds(const std::string& spec) {
    if (spec.empty()) return {};
    std::vector<double> out;
    if (spec.find(':') != std::string::npos) {
        // start:end:step sweep, end inclusive
        const auto parts = splitOn(spec, ':');
        if (parts.size() != 3) throw std::invalid_argument("thresholds sweep must be a:b:step");
        const double start = std::stod(parts[0]), end = std::stod(parts[1]),
                     step = std::stod(parts[2]);
        if (step <= 0) throw std::invalid_argument("threshold step must be positive");
        for (int k = 0;; ++k) {
            const double t = start + k * step;
            if (t > end + 1e-12) break;
            out.push_back(t);
        }
        return out;
    }
    for (const std::string& tok : splitOn(spec, ','))
        if (!trim(tok).empty()) out.push_back(std::stod(trim(tok)));
    return out;
}

Box3D boxFromJson(const json& jb) {
    Box3D box;
    box.center = Eigen::Vector3d(jb.at("center_cam").at(0).get<double>(),
                                 jb.at("center_cam").at(1).get<double>(),
                                 jb.at("center_cam").at(2).get<double>());
    box.dims = Eigen::Vector3d(jb.at("dims_whl").at(0).get<double>(),
                               jb.at("dims_whl").at(1).get<double>(),
                               jb.at("dims_whl").at(2).get<double>());
    if (jb.contains("rot_matrix")) {
        Eigen::Matrix3d m;
        for (int i = 0; i < 3; ++i)
            for (int k = 0; k < 3; ++k) m(i, k) = jb.at("rot_matrix").at(i * 3 + k).get<double>();
        box.rot = Rotation::orthonormalized(m);
    } else if (jb.contains("rot_euler_unit")) {
        box.rot = Rotation::fromEulerZYX(angleFromUnit(jb.at("rot_euler_unit").at(0).get<double>()),
                                         angleFromUnit(jb.at("rot_euler_unit").at(1).get<double>()),
                                         angleFromUnit(jb.at("rot_euler_unit").at(2).get<double>()));
    } else if (jb.contains("rot_euler_zyx")) {
        box.rot = Rotation::fromEulerZYX(jb.at("rot_euler_zyx").at(0).get<double>(),
                                         jb.at("rot_euler_zyx").at(1).get<double>(),
                                         jb.at("rot_euler_zyx").at(2).get<double>());
    } else if (jb.contains("yaw")) {
        box.rot = Rotation::fromUpAxisAngle(jb.at("yaw").get<double>());
    }
    return box;
}

Box3D boxFromDecoded(const codec::CosInstance& inst) {
    Box3D box;
    box.center = inst.center;
    box.dims = inst.dims;
    box.rot = inst.rotation;
    return box;
}

struct GtData {
    std::vector<eval::GtRecord> records;
    std::map<std::string, std::string> datasetOfImage;
};

GtData loadGt(CliContext& ctx, const std::vector<std::string>& gtSpecs) {
    GtData data;
    for (const std::string& spec : gtSpecs) {
        std::string name, path;
        const auto eq = spec.find('=');
        if (eq != std::string::npos) {
            name = spec.substr(0, eq);
            path = spec.substr(eq + 1);
        } else {
            path = spec;
            name = std::filesystem::path(path).stem().string();
        }
        std::map<std::pair<std::string, std::string>, std::size_t> index;
        std::ifstream in = openInput(path);
        forEachLine(in, [&](std::string_view lineText, std::size_t n) {
            if (trim(lineText).empty()) return;
            try {
                const auto line = curation::CanonicalLine::fromJsonLine(lineText);
                data.datasetOfImage[line.imagePath] = name;
                auto [it, inserted] =
                    index.try_emplace({line.imagePath, line.category}, data.records.size());
                if (inserted) data.records.push_back({name, line.imagePath, line.category, {}});
                for (const auto& r : line.instances)
                    data.records[it->second].boxes.push_back(r.box3d);
            } catch (const std::exception& e) {
                ctx.report({"error", path + ":" + std::to_string(n),
                            std::string("corrupt canonical line: ") + e.what()});
            }
        });
    }
    return data;
}

int evaluateDetection(CliContext& ctx, const std::vector<std::string>& gtSpecs,
                      const std::string& predPath, const std::vector<double>& thresholds,
                      const codec::SerializationPolicy& policy, const std::string& confidence,
                      const std::string& output, bool printTable,
                      const std::string& promptsPath) {
    const GtData gt = loadGt(ctx, gtSpecs);

    if (!promptsPath.empty()) {
        // Target-aware protocol: per-image prompt sets restricted to the
        // categories actually annotated there.
        std::vector<Diagnostic> promptDiags;
        const auto prompts = eval::targetAwarePrompts(gt.records, &promptDiags);
        for (auto& d : promptDiags) ctx.report(std::move(d));
        std::ofstream pout = openOutput(promptsPath);
        for (const auto& [imageId, categories] : prompts) {
            pout << "{\"image_id\":\"" << jsonEscape(imageId) << "\",\"categories\":[";
            bool first = true;
            for (const auto& c : categories) {
                if (!first) pout << ',';
                first = false;
                pout << '"' << jsonEscape(c) << '"';
            }
            pout << "]}\n";
        }
    }

    std::map<std::pair<std::string, std::string>, std::size_t> predIndex;
    std::vector<eval::DetectionRecord> preds;
    std::ifstream in = openInput(predPath);
    forEachLine(in, [&](std::string_view lineText, std::size_t n) {
        if (trim(lineText).empty()) return;
        try {
            const json j = json::parse(lineText);
            const std::string imageId = j.at("image_id").get<std::string>();
            const std::string category = j.at("category").get<std::string>();
            const auto dsIt = gt.datasetOfImage.find(imageId);
            if (dsIt == gt.datasetOfImage.end()) {
                ctx.report({"warning", predPath + ":" + std::to_string(n),
                            "prediction for unknown image " + imageId + "; skipped"});
                return;
            }
            auto [it, inserted] = predIndex.try_emplace({imageId, category}, preds.size());
            if (inserted) preds.push_back({dsIt->second, imageId, category, {}});
            eval::DetectionRecord& rec = preds[it->second];

            if (j.contains("boxes3d")) {
                for (const auto& jb : j.at("boxes3d")) rec.predictions.push_back(boxFromJson(jb));
            } else {
                const std::string text = j.at("response_text").get<std::string>();
                const auto res = codec::decodeSequence(text, policy, codec::DecodeMode::Recover);
                for (const auto& d : res.diagnostics)
                    ctx.report({"warning",
                                predPath + ":" + std::to_string(n) + " offset " +
                                    std::to_string(d.offset),
                                d.message});
                for (const auto& inst : res.sequence.instances)
                    rec.predictions.push_back(boxFromDecoded(inst));
            }
        } catch (const std::exception& e) {
            ctx.report({"error", predPath + ":" + std::to_string(n),
                        std::string("corrupt prediction line: ") + e.what()});
        }
    });

    eval::EvalConfig cfg;
    if (!thresholds.empty()) cfg.thresholds = thresholds;
    cfg.confidence = confidence == "uniform" ? eval::Confidence::UniformScore
                                             : eval::Confidence::EmissionOrder;
    eval::EvalReport report = eval::apSweep(preds, gt.records, cfg);
    for (const auto& d : report.diagnostics) ctx.report(d);

    std::ofstream out = openOutput(output);
    out << report.toJson() << "\n";
    if (printTable) std::cout << report.toTable();
    return ctx.finish();
}

int evaluateGrounding(CliContext& ctx, const std::vector<std::string>& gtSpecs,
                      const std::string& predPath, std::vector<double> thresholds,
                      const codec::SerializationPolicy& policy, const std::string& output,
                      bool printTable) {
    if (thresholds.empty()) thresholds = eval::defaultGroundingThresholds();

    std::map<std::string, std::size_t> queryIndex;
    std::vector<eval::GroundingQuery> queries;
    for (const std::string& spec : gtSpecs) {
        const std::string path = spec.substr(spec.find('=') + 1);
        std::ifstream in = openInput(path);
        forEachLine(in, [&](std::string_view lineText, std::size_t n) {
            if (trim(lineText).empty()) return;
            try {
                const json j = json::parse(lineText);
                eval::GroundingQuery q;
                q.queryId = j.at("query_id").get<std::string>();
                for (const auto& jb : j.at("gt_boxes3d")) q.gtBoxes.push_back(boxFromJson(jb));
                queryIndex[q.queryId] = queries.size();
                queries.push_back(std::move(q));
            } catch (const std::exception& e) {
                ctx.report({"error", path + ":" + std::to_string(n),
                            std::string("corrupt grounding GT line: ") + e.what()});
            }
        });
    }

    std::ifstream in = openInput(predPath);
    forEachLine(in, [&](std::string_view lineText, std::size_t n) {
        if (trim(lineText).empty()) return;
        try {
            const json j = json::parse(lineText);
            const std::string queryId = j.at("query_id").get<std::string>();
            const auto it = queryIndex.find(queryId);
            if (it == queryIndex.end()) {
                ctx.report({"warning", predPath + ":" + std::to_string(n),
                            "prediction for unknown query " + queryId + "; skipped"});
                return;
            }
            eval::GroundingQuery& q = queries[it->second];
            if (j.contains("box3d")) {
                q.prediction = boxFromJson(j.at("box3d"));
            } else {
                const std::string text = j.at("response_text").get<std::string>();
                const auto res = codec::decodeSequence(text, policy, codec::DecodeMode::Recover);
                if (!res.sequence.instances.empty()) {
                    q.prediction = boxFromDecoded(res.sequence.instances.front());
                    if (res.sequence.instances.size() > 1)
                        ctx.report({"warning", queryId,
                                    "grounding response carried multiple instances; first used"});
                }
            }
        } catch (const std::exception& e) {
            ctx.report({"error", predPath + ":" + std::to_string(n),
                        std::string("corrupt prediction line: ") + e.what()});
        }
    });

    eval::GroundingReport report = eval::groundingScore(queries, thresholds);
    for (const auto& d : report.diagnostics) ctx.report(d);
    std::ofstream out = openOutput(output);
    out << report.toJson() << "\n";
    if (printTable) {
        std::cout << "queries: " << report.queries << "\n";
        for (const auto& [tau, acc] : report.accuracyPerThreshold)
            std::cout << "acc@" << fixed2(tau) << ": " << fixed2(acc) << "\n";
        std::cout << "mean AP: " << fixed2(report.meanAp) << "\n";
    }
    return ctx.finish();
}

}  // namespace

int cmdEvaluate(CliContext& ctx, const std::vector<std::string>& gtSpecs,
                const std::string& predPath, const std::string& mode,
                const std::string& thresholdsSpec, const codec::SerializationPolicy& policy,
                const std::string& confidence, const std::string& output, bool printTable,
                const std::string& promptsPath) {
    const std::vector<double> thresholds = parseThresholds(thresholdsSpec);
    if (mode == "detection")
        return evaluateDetection(ctx, gtSpecs, predPath, thresholds, policy, confidence, output,
                                 printTable, promptsPath);
    if (mode == "grounding")
        return evaluateGrounding(ctx, gtSpecs, predPath, thresholds, policy, output, printTable);
    throw std::invalid_argument("unknown evaluate mode: " + mode);
}

}  // namespace cos3d::cli

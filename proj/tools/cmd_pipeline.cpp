#include <map>
#include <set>

#include "cli_common.hpp"
#include "cos3d/curation.hpp"
#include "cos3d/negatives.hpp"
#include "cos3d/packaging.hpp"
#include "cos3d/packing.hpp"
#include "json.hpp"

namespace cos3d::cli {

using nlohmann::json;

std::vector<std::string> loadVocabulary(const std::string& path) {
    std::vector<std::string> vocab;
    std::ifstream in = openInput(path);
    forEachLine(in, [&](std::string_view line, std::size_t) {
        const std::string t = trim(line);
        if (!t.empty() && t[0] != '#') vocab.push_back(t);
    });
    if (vocab.empty()) throw std::runtime_error("vocabulary file is empty: " + path);
    return vocab;
}

int cmdNormalize(CliContext& ctx, const std::string& adapterName, const std::string& input,
                 const std::string& output, const std::string& depthConvention) {
    curation::CurationOptions opts;
    if (depthConvention == "euclidean")
        opts.depthConvention = DepthConvention::EuclideanNorm;
    else if (depthConvention != "z" && !depthConvention.empty())
        throw std::invalid_argument("unknown depth convention: " + depthConvention);

    auto adapter = curation::makeAdapter(adapterName);
    std::ofstream out = openOutput(output);

    adapter->ingest(
        input,
        [&](curation::RawImage&& image) {
            if (!image.cam.principalPointInBounds())
                ctx.report({"warning", image.imagePath,
                            "principal point lies outside the image bounds"});
            std::vector<curation::DropRecord> dropped;
            const auto lines = curation::normalizeImage(image, opts, &dropped);
            for (const auto& d : dropped)
                ctx.report({"info", d.record.source.dataset + ":" + d.record.source.instanceId,
                            std::string("dropped: ") + curation::dropReasonName(d.reason)});
            for (const auto& line : lines) out << line.toJsonLine() << "\n";
        },
        ctx.sink());
    return ctx.finish();
}

int cmdNegatives(CliContext& ctx, const std::string& input, const std::string& vocabPath,
                 const std::string& proximityPath, const std::string& output,
                 std::uint64_t seed, int maxPerImage, double maxFraction, double hardShare) {
    negatives::NegativeSpec spec;
    spec.seed = seed;
    spec.maxPerImage = maxPerImage;
    spec.maxFraction = maxFraction;
    spec.hardNegativeShare = hardShare;
    spec.proximity = proximityPath.empty()
                         ? negatives::defaultProximityTable()
                         : negatives::parseProximityTable(readFile(proximityPath));

    const std::vector<std::string> vocab = loadVocabulary(vocabPath);

    // One positive example per canonical line; per-image present sets keep
    // first-appearance order.
    std::vector<negatives::ImageCategories> images;
    std::map<std::string, std::size_t> imageIndex;
    std::size_t positives = 0;
    std::ifstream in = openInput(input);
    forEachLine(in, [&](std::string_view lineText, std::size_t n) {
        if (trim(lineText).empty()) return;
        try {
            const auto line = curation::CanonicalLine::fromJsonLine(lineText);
            ++positives;
            auto [it, inserted] = imageIndex.try_emplace(line.imagePath, images.size());
            if (inserted) images.push_back({line.imagePath, {}});
            images[it->second].present.push_back(line.category);
        } catch (const std::exception& e) {
            ctx.report({"error", input + ":" + std::to_string(n),
                        std::string("corrupt canonical line: ") + e.what()});
        }
    });

    const auto stubs = negatives::sampleNegatives(images, vocab, positives, spec);
    std::ofstream out = openOutput(output);
    for (const auto& s : stubs) out << s.toJsonLine() << "\n";
    return ctx.finish();
}

namespace {

packaging::PromptBank loadBank(const std::string& templatesPath) {
    return templatesPath.empty() ? packaging::PromptBank::defaults()
                                 : packaging::PromptBank::fromJson(readFile(templatesPath));
}

int packageDetectionMode(CliContext& ctx, const std::string& input,
                         const std::string& negativesPath,
                         const codec::SerializationPolicy& policy,
                         const packaging::PromptBank& bank, std::uint64_t seed,
                         std::ofstream& out) {
    std::set<std::string> ids;
    auto emit = [&](const packaging::Conversation& conv) {
        if (!ids.insert(conv.id).second)
            ctx.report({"error", conv.id, "duplicate conversation id"});
        out << conv.toJsonLine() << "\n";
    };

    std::ifstream in = openInput(input);
    forEachLine(in, [&](std::string_view lineText, std::size_t n) {
        if (trim(lineText).empty()) return;
        try {
            const auto line = curation::CanonicalLine::fromJsonLine(lineText);
            emit(packaging::packageDetection(line, policy, bank, seed));
        } catch (const std::exception& e) {
            ctx.report({"error", input + ":" + std::to_string(n),
                        std::string("corrupt canonical line: ") + e.what()});
        }
    });

    if (!negativesPath.empty()) {
        std::ifstream nin = openInput(negativesPath);
        forEachLine(nin, [&](std::string_view lineText, std::size_t n) {
            if (trim(lineText).empty()) return;
            try {
                const auto stub = negatives::NegativeStub::fromJsonLine(lineText);
                emit(packaging::packageNegative(stub, bank, seed));
            } catch (const std::exception& e) {
                ctx.report({"error", negativesPath + ":" + std::to_string(n),
                            std::string("corrupt negative stub: ") + e.what()});
            }
        });
    }
    return ctx.finish();
}

int packageGroundingMode(CliContext& ctx, const std::string& input,
                         const codec::SerializationPolicy& policy,
                         const packaging::PromptBank& bank, std::uint64_t seed,
                         std::ofstream& out) {
    std::ifstream in = openInput(input);
    forEachLine(in, [&](std::string_view lineText, std::size_t n) {
        if (trim(lineText).empty()) return;
        try {
            const auto line = curation::CanonicalLine::fromJsonLine(lineText);
            for (std::size_t i = 0; i < line.instances.size(); ++i) {
                out << packaging::packageGrounding(line, i, packaging::GroundingMode::CategoryOnly,
                                                   policy, bank, seed)
                           .toJsonLine()
                    << "\n";
                out << packaging::packageGrounding(line, i,
                                                   packaging::GroundingMode::CategoryPlusLocation,
                                                   policy, bank, seed)
                           .toJsonLine()
                    << "\n";
            }
        } catch (const std::exception& e) {
            ctx.report({"error", input + ":" + std::to_string(n),
                        std::string("corrupt canonical line: ") + e.what()});
        }
    });
    return ctx.finish();
}

int packageJobsMode(CliContext& ctx, const std::string& input, const packaging::PromptBank& bank,
                    std::ofstream& out) {
    std::ifstream in = openInput(input);
    forEachLine(in, [&](std::string_view lineText, std::size_t n) {
        if (trim(lineText).empty()) return;
        try {
            const auto line = curation::CanonicalLine::fromJsonLine(lineText);
            for (std::size_t i = 0; i < line.instances.size(); ++i)
                out << packaging::buildAnnotationJob(line, i, bank).toJsonLine() << "\n";
        } catch (const std::exception& e) {
            ctx.report({"error", input + ":" + std::to_string(n),
                        std::string("corrupt canonical line: ") + e.what()});
        }
    });
    return ctx.finish();
}

int packagePretrain2dMode(CliContext& ctx, const std::string& input,
                          const std::string& vocabPath, const packaging::PromptBank& bank,
                          std::uint64_t seed, std::ofstream& out) {
    if (vocabPath.empty())
        throw std::invalid_argument("--vocab is required for pretrain2d packaging");
    const std::vector<std::string> vocab = loadVocabulary(vocabPath);

    std::ifstream in = openInput(input);
    forEachLine(in, [&](std::string_view lineText, std::size_t n) {
        if (trim(lineText).empty()) return;
        try {
            const json j = json::parse(lineText);
            packaging::Annotated2DImage img;
            img.image = j.at("image_path").get<std::string>();
            img.cam.width = j.at("width").get<int>();
            img.cam.height = j.at("height").get<int>();
            img.cam.fx = img.cam.fy = 1;  // only the image size matters here
            std::map<std::string, std::size_t> index;
            for (const auto& ja : j.at("annotations")) {
                const std::string category = ja.at("category").get<std::string>();
                PixelRect box;
                for (int k = 0; k < 4; ++k) box[k] = ja.at("bbox").at(k).get<double>();
                auto [it, inserted] = index.try_emplace(category, img.byCategory.size());
                if (inserted) img.byCategory.push_back({category, {}});
                img.byCategory[it->second].second.push_back(box);
            }
            out << packaging::package2DPretraining(img, vocab, bank, seed).toJsonLine() << "\n";
        } catch (const std::exception& e) {
            ctx.report({"error", input + ":" + std::to_string(n),
                        std::string("corrupt 2d annotation line: ") + e.what()});
        }
    });
    return ctx.finish();
}

}  // namespace

int cmdPackage(CliContext& ctx, const std::string& input, const std::string& negativesPath,
               const std::string& mode, const codec::SerializationPolicy& policy,
               const std::string& templatesPath, const std::string& vocabPath,
               std::uint64_t seed, const std::string& output) {
    const packaging::PromptBank bank = loadBank(templatesPath);
    std::ofstream out = openOutput(output);
    if (mode == "detection")
        return packageDetectionMode(ctx, input, negativesPath, policy, bank, seed, out);
    if (mode == "grounding") return packageGroundingMode(ctx, input, policy, bank, seed, out);
    if (mode == "jobs") return packageJobsMode(ctx, input, bank, out);
    if (mode == "pretrain2d")
        return packagePretrain2dMode(ctx, input, vocabPath, bank, seed, out);
    throw std::invalid_argument("unknown package mode: " + mode);
}

int cmdPack(CliContext& ctx, const std::string& input, const std::string& imageMetaPath,
            const std::string& output, long long budget, int perTileTokens, int tileSize,
            int minTiles, int maxTiles) {
    std::map<std::string, std::pair<int, int>> imageSizes;
    if (!imageMetaPath.empty()) {
        std::ifstream metaIn = openInput(imageMetaPath);
        forEachLine(metaIn, [&](std::string_view lineText, std::size_t n) {
            if (trim(lineText).empty()) return;
            try {
                const json j = json::parse(lineText);
                if (j.contains("image_path") && j.contains("image_width"))
                    imageSizes[j.at("image_path").get<std::string>()] = {
                        j.at("image_width").get<int>(), j.at("image_height").get<int>()};
                else if (j.contains("image") && j.contains("width"))
                    imageSizes[j.at("image").get<std::string>()] = {j.at("width").get<int>(),
                                                                    j.at("height").get<int>()};
            } catch (const std::exception& e) {
                ctx.report({"error", imageMetaPath + ":" + std::to_string(n),
                            std::string("corrupt image meta line: ") + e.what()});
            }
        });
    }

    packing::TokenCountConfig cfg;
    cfg.perTileTokens = perTileTokens;

    std::vector<packing::PackItem> items;
    std::set<std::string> warnedImages;
    std::ifstream in = openInput(input);
    forEachLine(in, [&](std::string_view lineText, std::size_t n) {
        if (trim(lineText).empty()) return;
        try {
            const auto conv = packaging::Conversation::fromJsonLine(lineText);
            std::optional<packing::Tiling> tiling;
            if (const auto it = imageSizes.find(conv.image); it != imageSizes.end()) {
                tiling = packing::selectTiling(it->second.first, it->second.second, tileSize,
                                               minTiles, maxTiles);
            } else if (!imageMetaPath.empty() && warnedImages.insert(conv.image).second) {
                ctx.report({"warning", conv.image,
                            "no image metadata; conversation counted as text-only"});
            }
            items.push_back({conv.id, packing::tokenCount(conv, tiling, cfg)});
        } catch (const std::exception& e) {
            ctx.report({"error", input + ":" + std::to_string(n),
                        std::string("corrupt conversation line: ") + e.what()});
        }
    });

    std::vector<Diagnostic> packDiags;
    const auto packs = packing::packStream(items, budget, &packDiags);
    for (auto& d : packDiags) ctx.report(std::move(d));

    std::ofstream out = openOutput(output);
    long long packId = 0;
    for (const auto& p : packs) out << p.toJsonLine(packId++) << "\n";
    return ctx.finish();
}

}  // namespace cos3d::cli

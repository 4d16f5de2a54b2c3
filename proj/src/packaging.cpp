#include "cos3d/packaging.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "cos3d/embedded_data.hpp"
#include "json.hpp"

using nlohmann::json;

namespace cos3d::packaging {
namespace {

std::string replaceAll(std::string text, std::string_view what, std::string_view with) {
    std::size_t pos = 0;
    while ((pos = text.find(what, pos)) != std::string::npos) {
        text.replace(pos, what.size(), with);
        pos += with.size();
    }
    return text;
}

const std::string& pickTemplate(const std::vector<std::string>& bank, Rng& rng) {
    if (bank.empty()) throw std::invalid_argument("prompt bank is empty");
    return bank[static_cast<std::size_t>(rng.below(bank.size()))];
}

codec::SceneInstance toSceneInstance(const curation::InstanceRecord& r) {
    return codec::SceneInstance{r.box3d, r.box2d, r.depth};
}

}  // namespace

PromptBank PromptBank::fromJson(std::string_view jsonText) {
    const json j = json::parse(jsonText);
    PromptBank bank;
    bank.detection = j.at("detection").get<std::vector<std::string>>();
    bank.groundingCategory = j.at("grounding_category").get<std::vector<std::string>>();
    bank.groundingLocated = j.at("grounding_located").get<std::vector<std::string>>();
    bank.pretrain2d = j.at("pretrain2d").get<std::vector<std::string>>();
    bank.pretrain2dNone = j.at("pretrain2d_none").get<std::string>();
    bank.annotationJob = j.at("annotation_job").get<std::string>();
    return bank;
}

const PromptBank& PromptBank::defaults() {
    static const PromptBank bank = fromJson(embedded::kPromptBankJson);
    return bank;
}

std::string Conversation::toJsonLine() const {
    std::string out = "{\"id\":\"" + jsonEscape(id) + "\",\"image\":\"" + jsonEscape(image) +
                      "\",\"conversations\":[";
    for (std::size_t i = 0; i < turns.size(); ++i) {
        if (i) out += ',';
        out += "{\"from\":\"" + jsonEscape(turns[i].from) + "\",\"value\":\"" +
               jsonEscape(turns[i].value) + "\"}";
    }
    out += "]}";
    return out;
}

Conversation Conversation::fromJsonLine(std::string_view line) {
    const json j = json::parse(line);
    Conversation c;
    c.id = j.at("id").get<std::string>();
    c.image = j.at("image").get<std::string>();
    for (const auto& jt : j.at("conversations"))
        c.turns.push_back({jt.at("from").get<std::string>(), jt.at("value").get<std::string>()});
    return c;
}

Conversation packageDetection(const curation::CanonicalLine& line,
                              const codec::SerializationPolicy& policy, const PromptBank& bank,
                              std::uint64_t seed) {
    Rng rng(deriveSeed(seed, "det|" + line.imagePath + "|" + line.category));
    Conversation conv;
    conv.id = "det:" + line.imagePath + ":" + line.category;
    conv.image = line.imagePath;

    std::vector<codec::SceneInstance> scene;
    scene.reserve(line.instances.size());
    for (const auto& r : line.instances) scene.push_back(toSceneInstance(r));

    conv.turns.push_back(
        {"human", replaceAll(pickTemplate(bank.detection, rng), "{category}", line.category)});
    conv.turns.push_back({"gpt", codec::encodeScene(scene, policy, line.cam)});
    return conv;
}

Conversation packageNegative(const negatives::NegativeStub& stub, const PromptBank& bank,
                             std::uint64_t seed) {
    Rng rng(deriveSeed(seed, "neg|" + stub.imagePath + "|" + stub.category));
    Conversation conv;
    conv.id = "neg:" + stub.imagePath + ":" + stub.category;
    conv.image = stub.imagePath;
    conv.turns.push_back(
        {"human", replaceAll(pickTemplate(bank.detection, rng), "{category}", stub.category)});
    conv.turns.push_back({"gpt", codec::kNoObjectSentinel});
    return conv;
}

const char* horizontalName(Horizontal h) {
    switch (h) {
        case Horizontal::Left: return "left";
        case Horizontal::Center: return "center";
        case Horizontal::Right: return "right";
    }
    return "?";
}

const char* depthRangeName(DepthRange r) {
    switch (r) {
        case DepthRange::Close: return "close";
        case DepthRange::Medium: return "medium";
        case DepthRange::Far: return "far";
    }
    return "?";
}

SpatialQualifier spatialQualifier(const curation::InstanceRecord& instance,
                                  const CameraIntrinsics& cam,
                                  std::span<const double> sceneDepths) {
    SpatialQualifier q{Horizontal::Center, DepthRange::Far};

    const double cxBox = (instance.box2d.pixel[0] + instance.box2d.pixel[2]) / 2.0;
    const double third = cam.width / 3.0;
    if (cxBox < third)
        q.horizontal = Horizontal::Left;
    else if (cxBox < 2.0 * third)
        q.horizontal = Horizontal::Center;
    else
        q.horizontal = Horizontal::Right;

    std::vector<double> sorted(sceneDepths.begin(), sceneDepths.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double d = instance.depth;
    if (n >= 3) {
        const double t1 = sorted[n / 3];
        const double t2 = sorted[2 * n / 3];
        if (d < t1)
            q.range = DepthRange::Close;
        else if (d >= t2)
            q.range = DepthRange::Far;
        else
            q.range = DepthRange::Medium;
    } else if (n > 0) {
        // Degenerate scenes: close/far split at the median. A single
        // instance equals the median and therefore lands on far.
        const double median = n == 1 ? sorted[0] : (sorted[0] + sorted[1]) / 2.0;
        q.range = d < median ? DepthRange::Close : DepthRange::Far;
    }
    return q;
}

Conversation packageGrounding(const curation::CanonicalLine& line, std::size_t targetIndex,
                              GroundingMode mode, const codec::SerializationPolicy& policy,
                              const PromptBank& bank, std::uint64_t seed) {
    if (targetIndex >= line.instances.size())
        throw std::out_of_range("packageGrounding: target index " + std::to_string(targetIndex) +
                                " out of range");
    const curation::InstanceRecord& target = line.instances[targetIndex];

    const std::string modeTag = mode == GroundingMode::CategoryOnly ? "cat" : "loc";
    Rng rng(deriveSeed(seed, "gnd|" + line.imagePath + "|" + line.category + "|" +
                                 std::to_string(targetIndex) + "|" + modeTag));

    Conversation conv;
    conv.id = "gnd:" + line.imagePath + ":" + line.category + ":" + std::to_string(targetIndex) +
              ":" + modeTag;
    conv.image = line.imagePath;

    std::string prompt;
    if (mode == GroundingMode::CategoryOnly) {
        prompt = replaceAll(pickTemplate(bank.groundingCategory, rng), "{category}", line.category);
    } else {
        std::vector<double> depths;
        for (const auto& r : line.instances) depths.push_back(r.depth);
        const SpatialQualifier q = spatialQualifier(target, line.cam, depths);
        prompt = pickTemplate(bank.groundingLocated, rng);
        prompt = replaceAll(prompt, "{category}", line.category);
        prompt = replaceAll(prompt, "{horizontal}", horizontalName(q.horizontal));
        prompt = replaceAll(prompt, "{range}", depthRangeName(q.range));
    }
    conv.turns.push_back({"human", std::move(prompt)});

    const codec::SceneInstance scene[] = {toSceneInstance(target)};
    conv.turns.push_back({"gpt", codec::encodeScene(scene, policy, line.cam)});
    return conv;
}

std::string AnnotationJob::toJsonLine() const {
    std::string out = "{\"image\":\"" + jsonEscape(image) + "\",\"bbox_px\":[";
    for (int i = 0; i < 4; ++i) {
        if (i) out += ',';
        out += fixed2(bboxPx[i]);
    }
    out += "],\"category\":\"" + jsonEscape(category) + "\",\"instructions\":\"" +
           jsonEscape(instructions) + "\"}";
    return out;
}

AnnotationJob buildAnnotationJob(const curation::CanonicalLine& line, std::size_t targetIndex,
                                 const PromptBank& bank) {
    if (targetIndex >= line.instances.size())
        throw std::out_of_range("buildAnnotationJob: target index " +
                                std::to_string(targetIndex) + " out of range");
    const curation::InstanceRecord& target = line.instances[targetIndex];
    return AnnotationJob{line.imagePath, target.box2d.pixel, line.category, bank.annotationJob};
}

Conversation package2DPretraining(const Annotated2DImage& image,
                                  const std::vector<std::string>& vocabulary,
                                  const PromptBank& bank, std::uint64_t seed) {
    Rng rng(deriveSeed(seed, "p2d|" + image.image));

    Conversation conv;
    conv.id = "p2d:" + image.image;
    conv.image = image.image;

    std::set<std::string> present;
    for (const auto& [category, boxes] : image.byCategory) present.insert(category);

    std::vector<std::pair<std::string, std::string>> turns;  // (prompt, answer)
    for (const auto& [category, boxes] : image.byCategory) {
        std::string answer;
        for (std::size_t i = 0; i < boxes.size(); ++i) {
            const NormRect n = codec::quantize2D(boxes[i], image.cam);
            if (i) answer += ", ";
            answer += "[" + std::to_string(n[0]) + ", " + std::to_string(n[1]) + ", " +
                      std::to_string(n[2]) + ", " + std::to_string(n[3]) + "]";
        }
        turns.emplace_back(category, std::move(answer));
    }

    std::vector<std::string> absent;
    for (const std::string& c : vocabulary)
        if (!present.count(c)) absent.push_back(c);
    const std::size_t nNeg = std::min<std::size_t>(kPretrainNegativeTurns, absent.size());
    for (std::size_t k = 0; k < nNeg; ++k) {
        const std::size_t j = static_cast<std::size_t>(rng.below(absent.size()));
        turns.emplace_back(absent[j], bank.pretrain2dNone);
        absent.erase(absent.begin() + static_cast<std::ptrdiff_t>(j));
    }

    // Mix existence and non-existence turns.
    rng.shuffle(turns);

    for (auto& [category, answer] : turns) {
        conv.turns.push_back({"human", replaceAll(bank.pretrain2d[0], "{categories}", category)});
        conv.turns.push_back({"gpt", std::move(answer)});
    }
    return conv;
}

}  // namespace cos3d::packaging

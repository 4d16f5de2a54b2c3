#include "cli_common.hpp"
#include "cos3d/curation.hpp"
#include "json.hpp"

namespace cos3d::cli {

using ordered_json = nlohmann::ordered_json;

int cmdEncode(CliContext& ctx, const std::string& input, const std::string& output,
              const codec::SerializationPolicy& policy) {
    std::ifstream in = openInput(input);
    std::ofstream out = openOutput(output);
    forEachLine(in, [&](std::string_view lineText, std::size_t n) {
        if (trim(lineText).empty()) return;
        try {
            const auto line = curation::CanonicalLine::fromJsonLine(lineText);
            std::vector<codec::SceneInstance> scene;
            for (const auto& r : line.instances) scene.push_back({r.box3d, r.box2d, r.depth});
            out << "{\"image\":\"" << jsonEscape(line.imagePath) << "\",\"category\":\""
                << jsonEscape(line.category) << "\",\"text\":\""
                << jsonEscape(codec::encodeScene(scene, policy, line.cam)) << "\"}\n";
        } catch (const std::exception& e) {
            ctx.report({"error", input + ":" + std::to_string(n),
                        std::string("corrupt canonical line: ") + e.what()});
        }
    });
    return ctx.finish();
}

namespace {

ordered_json instanceToJson(const codec::CosInstance& inst) {
    ordered_json ji;
    if (inst.box2dNorm) {
        ji["box2d_norm"] = *inst.box2dNorm;
        if (inst.box2dPixel) ji["box2d_px"] = *inst.box2dPixel;
    }
    ji["center_cam"] = {inst.center.x(), inst.center.y(), inst.center.z()};
    ji["dims_whl"] = {inst.dims.x(), inst.dims.y(), inst.dims.z()};
    ji["rotation_raw"] = inst.rotationRaw;
    const auto e = inst.rotation.eulerZYX();
    ji["rot_euler_zyx"] = {e[0], e[1], e[2]};
    return ji;
}

}  // namespace

int cmdDecode(CliContext& ctx, const std::string& input, const std::string& output,
              const codec::SerializationPolicy& policy, bool strict, const std::string& format) {
    const codec::DecodeMode mode = strict ? codec::DecodeMode::Strict : codec::DecodeMode::Recover;
    std::ifstream in = openInput(input);
    std::ofstream out = openOutput(output);

    forEachLine(in, [&](std::string_view lineText, std::size_t n) {
        if (trim(lineText).empty()) return;
        ordered_json record;
        std::string text;
        try {
            if (format == "text") {
                text = std::string(lineText);
            } else {
                const auto j = nlohmann::json::parse(lineText);
                if (j.contains("image")) record["image"] = j.at("image");
                if (j.contains("image_id")) record["image_id"] = j.at("image_id");
                if (j.contains("category")) record["category"] = j.at("category");
                if (j.contains("text"))
                    text = j.at("text").get<std::string>();
                else
                    text = j.at("response_text").get<std::string>();
            }
        } catch (const std::exception& e) {
            ctx.report({"error", input + ":" + std::to_string(n),
                        std::string("corrupt input line: ") + e.what()});
            return;
        }

        try {
            const codec::DecodeResult res = codec::decodeSequence(text, policy, mode);
            record["terminal"] =
                res.sequence.terminal == codec::Terminal::NoObject ? "no_object" : "eos";
            record["instances"] = ordered_json::array();
            for (const auto& inst : res.sequence.instances)
                record["instances"].push_back(instanceToJson(inst));
            if (!res.diagnostics.empty()) {
                record["diagnostics"] = ordered_json::array();
                for (const auto& d : res.diagnostics) {
                    record["diagnostics"].push_back(
                        {{"offset", d.offset}, {"expected", d.expected}, {"message", d.message}});
                    ctx.report({"warning", input + ":" + std::to_string(n) + " offset " +
                                               std::to_string(d.offset),
                                d.message});
                }
            }
            out << record.dump() << "\n";
        } catch (const codec::CosParseError& e) {
            ctx.report({"error",
                        input + ":" + std::to_string(n) + " offset " + std::to_string(e.offset()),
                        std::string(e.what())});
        }
    });
    return ctx.finish();
}

}  // namespace cos3d::cli

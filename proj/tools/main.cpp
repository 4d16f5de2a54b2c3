// cos3d: turns heterogeneous monocular 3D-detection annotations into a
// depth-ordered, token-serialized training corpus and scores model output
// with volumetric 3D average precision.

#include <iostream>

#include "CLI11.hpp"
#include "cli_common.hpp"

using namespace cos3d;
using namespace cos3d::cli;

namespace {

void addCommonFlags(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.configPath, "key=value config file (flags win)");
    cmd->add_option("--diagnostics", args.diagnosticsPath,
                    "write per-record diagnostics to this JSONL file (default stderr)");
    cmd->add_option("--seed", args.seed, "RNG seed (wins over COS3D_SEED and config)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "cos3d: camera-frame 3D detection corpus builder and volumetric AP evaluator"};
    app.require_subcommand(1);

    // ------------------------------------------------------------------ normalize
    CommonArgs nArgs;
    std::string nAdapter, nInput, nOutput, nDepth;
    auto* normalize = app.add_subcommand(
        "normalize", "ingest raw annotations and emit canonical depth-sorted lines");
    addCommonFlags(normalize, nArgs);
    normalize->add_option("--adapter", nAdapter, "dataset adapter: synthetic|canonical|kitti");
    normalize->add_option("--input", nInput, "adapter source (file or directory)");
    normalize->add_option("--output", nOutput, "canonical JSONL output path");
    normalize->add_option("--depth", nDepth, "depth convention: z (default) | euclidean");

    // ------------------------------------------------------------------ negatives
    CommonArgs gArgs;
    std::string gInput, gVocab, gProximity, gOutput;
    int gMaxPerImage = -1;
    double gMaxFraction = -1, gHardShare = -1;
    auto* negativesCmd = app.add_subcommand(
        "negatives", "sample absent-category negative stubs under the corpus caps");
    addCommonFlags(negativesCmd, gArgs);
    negativesCmd->add_option("--input", gInput, "canonical JSONL input");
    negativesCmd->add_option("--vocab", gVocab, "vocabulary file, one category per line");
    negativesCmd->add_option("--proximity", gProximity,
                             "proximity table (category<TAB>neighbors); default built-in");
    negativesCmd->add_option("--output", gOutput, "negative stub JSONL output");
    negativesCmd->add_option("--max-per-image", gMaxPerImage, "per-image cap (default 2)");
    negativesCmd->add_option("--max-fraction", gMaxFraction,
                             "corpus-level negative fraction cap (default 0.10)");
    negativesCmd->add_option("--hard-share", gHardShare,
                             "share of draws taken from proximity neighbors (default 0.5)");

    // ------------------------------------------------------------------ package
    CommonArgs pArgs;
    std::string pInput, pNegatives, pMode, pPolicy, pTemplates, pVocab, pOutput;
    auto* packageCmd = app.add_subcommand(
        "package", "convert canonical lines (+negatives) into conversation records");
    addCommonFlags(packageCmd, pArgs);
    packageCmd->add_option("--input", pInput, "canonical JSONL (2D JSONL for pretrain2d)");
    packageCmd->add_option("--negatives", pNegatives, "negative stub JSONL (detection mode)");
    packageCmd->add_option("--mode", pMode, "detection|grounding|jobs|pretrain2d");
    packageCmd->add_option("--policy", pPolicy,
                           "serialization policy tokens, e.g. near_to_far,2d3d,csr,interleaved,euler");
    packageCmd->add_option("--templates", pTemplates, "prompt template JSON (default built-in)");
    packageCmd->add_option("--vocab", pVocab, "vocabulary file (pretrain2d mode)");
    packageCmd->add_option("--output", pOutput, "output JSONL path");

    // ------------------------------------------------------------------ pack
    CommonArgs kArgs;
    std::string kInput, kMeta, kOutput;
    long long kBudget = -1;
    int kPerTile = -1, kTileSize = -1, kMinTiles = -1, kMaxTiles = -1;
    auto* packCmd = app.add_subcommand(
        "pack", "greedily pack conversations into fixed token-budget context windows");
    addCommonFlags(packCmd, kArgs);
    packCmd->add_option("--input", kInput, "conversation JSONL input");
    packCmd->add_option("--image-meta", kMeta,
                        "canonical JSONL (or {image,width,height} JSONL) giving image sizes");
    packCmd->add_option("--output", kOutput, "pack manifest JSONL output");
    packCmd->add_option("--budget", kBudget, "context token budget (default 16384)");
    packCmd->add_option("--per-tile-tokens", kPerTile, "visual tokens per tile (default 256)");
    packCmd->add_option("--tile-size", kTileSize, "tile edge in pixels (default 448)");
    packCmd->add_option("--min-tiles", kMinTiles, "minimum tile count (default 1)");
    packCmd->add_option("--max-tiles", kMaxTiles, "maximum tile count (default 12)");

    // ------------------------------------------------------------------ encode
    CommonArgs eArgs;
    std::string eInput, eOutput, ePolicy;
    auto* encodeCmd =
        app.add_subcommand("encode", "serialize canonical lines into token text");
    addCommonFlags(encodeCmd, eArgs);
    encodeCmd->add_option("--input", eInput, "canonical JSONL input");
    encodeCmd->add_option("--output", eOutput, "JSONL output: {image, category, text}");
    encodeCmd->add_option("--policy", ePolicy, "serialization policy tokens");

    // ------------------------------------------------------------------ decode
    CommonArgs dArgs;
    std::string dInput, dOutput, dPolicy, dFormat = "jsonl";
    bool dStrict = false, dRecover = false;
    auto* decodeCmd =
        app.add_subcommand("decode", "parse serialized sequences back into structured boxes");
    addCommonFlags(decodeCmd, dArgs);
    decodeCmd->add_option("--input", dInput, "input file");
    decodeCmd->add_option("--output", dOutput, "decoded JSONL output");
    decodeCmd->add_option("--policy", dPolicy, "serialization policy tokens");
    decodeCmd->add_option("--format", dFormat, "jsonl (field text/response_text) | text");
    decodeCmd->add_flag("--strict", dStrict, "fail on any grammar violation (default)");
    decodeCmd->add_flag("--recover", dRecover, "skip malformed instances and report them");

    // ------------------------------------------------------------------ evaluate
    CommonArgs vArgs;
    std::vector<std::string> vGt;
    std::string vPred, vMode, vThresholds, vPolicy, vConfidence, vOutput, vPrompts;
    bool vTable = false;
    auto* evalCmd = app.add_subcommand(
        "evaluate", "volumetric 3D AP over a threshold sweep, or the grounding metric");
    addCommonFlags(evalCmd, vArgs);
    evalCmd->add_option("--gt", vGt,
                        "ground truth: [dataset=]path, repeatable (canonical JSONL; grounding "
                        "mode expects query JSONL)");
    evalCmd->add_option("--pred", vPred, "prediction JSONL");
    evalCmd->add_option("--mode", vMode, "detection (default) | grounding");
    evalCmd->add_option("--thresholds", vThresholds,
                        "comma list or start:end:step (defaults: detection 0.05:0.50:0.05, "
                        "grounding 0.15,0.25,0.50)");
    evalCmd->add_option("--policy", vPolicy, "policy for decoding response_text");
    evalCmd->add_option("--confidence", vConfidence,
                        "emission (default) | uniform score handling");
    evalCmd->add_option("--output", vOutput, "report JSON output");
    evalCmd->add_option("--prompts", vPrompts,
                        "also write per-image target-aware prompt sets to this JSONL file");
    evalCmd->add_flag("--table", vTable, "print an aligned text table to stdout");

    // ------------------------------------------------------------------ bev
    CommonArgs bArgs;
    std::string bInput, bImage, bOutput, bSvg;
    auto* bevCmd = app.add_subcommand(
        "bev", "emit bird's-eye-view footprint polygons (and an optional SVG) for a scene");
    addCommonFlags(bevCmd, bArgs);
    bevCmd->add_option("--input", bInput, "canonical JSONL input");
    bevCmd->add_option("--image", bImage, "image path to plot (default: first in the file)");
    bevCmd->add_option("--output", bOutput, "BEV polygon JSON output");
    bevCmd->add_option("--svg", bSvg, "optional SVG file with a 1m x 1m grid");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (normalize->parsed()) {
            CliContext ctx = makeContext(nArgs);
            return cmdNormalize(ctx, ctx.resolve(nAdapter, "adapter", "synthetic"),
                                ctx.resolve(nInput, "input"), ctx.resolve(nOutput, "output"),
                                ctx.resolve(nDepth, "depth", "z"));
        }
        if (negativesCmd->parsed()) {
            CliContext ctx = makeContext(gArgs);
            return cmdNegatives(
                ctx, ctx.resolve(gInput, "input"), ctx.resolve(gVocab, "vocab"),
                ctx.resolve(gProximity, "proximity"), ctx.resolve(gOutput, "output"),
                ctx.resolveSeed(gArgs.seed),
                gMaxPerImage >= 0 ? gMaxPerImage
                                  : static_cast<int>(ctx.config.getInt("max_per_image", 2)),
                gMaxFraction >= 0 ? gMaxFraction : ctx.config.getDouble("max_fraction", 0.10),
                gHardShare >= 0 ? gHardShare : ctx.config.getDouble("hard_share", 0.5));
        }
        if (packageCmd->parsed()) {
            CliContext ctx = makeContext(pArgs);
            return cmdPackage(ctx, ctx.resolve(pInput, "input"),
                              ctx.resolve(pNegatives, "negatives"),
                              ctx.resolve(pMode, "mode", "detection"), ctx.resolvePolicy(pPolicy),
                              ctx.resolve(pTemplates, "templates"), ctx.resolve(pVocab, "vocab"),
                              ctx.resolveSeed(pArgs.seed), ctx.resolve(pOutput, "output"));
        }
        if (packCmd->parsed()) {
            CliContext ctx = makeContext(kArgs);
            return cmdPack(
                ctx, ctx.resolve(kInput, "input"), ctx.resolve(kMeta, "image_meta"),
                ctx.resolve(kOutput, "output"),
                kBudget >= 0 ? kBudget : ctx.config.getInt("budget", 16384),
                kPerTile >= 0 ? kPerTile
                              : static_cast<int>(ctx.config.getInt("per_tile_tokens", 256)),
                kTileSize >= 0 ? kTileSize : static_cast<int>(ctx.config.getInt("tile_size", 448)),
                kMinTiles >= 0 ? kMinTiles : static_cast<int>(ctx.config.getInt("min_tiles", 1)),
                kMaxTiles >= 0 ? kMaxTiles : static_cast<int>(ctx.config.getInt("max_tiles", 12)));
        }
        if (encodeCmd->parsed()) {
            CliContext ctx = makeContext(eArgs);
            return cmdEncode(ctx, ctx.resolve(eInput, "input"), ctx.resolve(eOutput, "output"),
                             ctx.resolvePolicy(ePolicy));
        }
        if (decodeCmd->parsed()) {
            CliContext ctx = makeContext(dArgs);
            if (dStrict && dRecover)
                throw CLI::ValidationError("--strict and --recover are mutually exclusive");
            const bool strict = dRecover ? false : true;
            return cmdDecode(ctx, ctx.resolve(dInput, "input"), ctx.resolve(dOutput, "output"),
                             ctx.resolvePolicy(dPolicy), strict,
                             ctx.resolve(dFormat, "format", "jsonl"));
        }
        if (evalCmd->parsed()) {
            CliContext ctx = makeContext(vArgs);
            return cmdEvaluate(ctx, vGt, ctx.resolve(vPred, "pred"),
                               ctx.resolve(vMode, "mode", "detection"),
                               ctx.resolve(vThresholds, "thresholds"), ctx.resolvePolicy(vPolicy),
                               ctx.resolve(vConfidence, "confidence", "emission"),
                               ctx.resolve(vOutput, "output"), vTable, vPrompts);
        }
        if (bevCmd->parsed()) {
            CliContext ctx = makeContext(bArgs);
            return cmdBev(ctx, ctx.resolve(bInput, "input"), bImage,
                          ctx.resolve(bOutput, "output"), ctx.resolve(bSvg, "svg"));
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "{\"severity\":\"error\",\"where\":\"cos3d\",\"message\":\""
                  << jsonEscape(e.what()) << "\"}\n";
        return kExitDataError;
    }
    return kExitUsage;
}

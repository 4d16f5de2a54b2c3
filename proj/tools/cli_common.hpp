#pragma once

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cos3d/codec.hpp"
#include "cos3d/common.hpp"
#include "cos3d/config.hpp"

namespace cos3d::cli {

// Exit codes: 0 success, 1 data errors (reported per record), 2 usage errors.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 1;
inline constexpr int kExitUsage = 2;

struct CliContext {
    Config config;
    std::string diagnosticsPath;
    std::vector<Diagnostic> diagnostics;
    bool anyError = false;

    void report(Diagnostic d) {
        anyError = anyError || d.severity == "error";
        diagnostics.push_back(std::move(d));
    }

    DiagnosticSink sink() {
        return [this](const Diagnostic& d) { report(d); };
    }

    // Writes the diagnostics file (or stderr) and returns the exit code.
    int finish() {
        if (!diagnostics.empty()) {
            if (!diagnosticsPath.empty()) {
                std::ofstream out(diagnosticsPath);
                for (const auto& d : diagnostics) out << d.toJsonLine() << "\n";
            } else {
                for (const auto& d : diagnostics) std::cerr << d.toJsonLine() << "\n";
            }
        }
        return anyError ? kExitDataError : kExitOk;
    }

    // Flag wins, then COS3D_SEED, then the config file.
    std::uint64_t resolveSeed(const std::optional<std::uint64_t>& flagSeed) const {
        if (flagSeed) return *flagSeed;
        if (const char* env = std::getenv("COS3D_SEED")) return std::stoull(env);
        return config.getUint("seed", 0);
    }

    codec::SerializationPolicy resolvePolicy(const std::string& flagPolicy) const {
        const std::string spec = !flagPolicy.empty() ? flagPolicy : config.getOr("policy", "");
        return spec.empty() ? codec::SerializationPolicy{}
                            : codec::SerializationPolicy::parse(spec);
    }

    std::string resolve(const std::string& flagValue, const std::string& key,
                        const std::string& fallback = "") const {
        if (!flagValue.empty()) return flagValue;
        return config.getOr(key, fallback);
    }
};

struct CommonArgs {
    std::string configPath;
    std::string diagnosticsPath;
    std::optional<std::uint64_t> seed;
};

inline CliContext makeContext(const CommonArgs& args) {
    CliContext ctx;
    if (!args.configPath.empty()) ctx.config = Config::fromFile(args.configPath);
    ctx.diagnosticsPath = args.diagnosticsPath;
    return ctx;
}

inline std::ofstream openOutput(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    return out;
}

inline std::ifstream openInput(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open input file: " + path);
    return in;
}

// Subcommand entry points.
int cmdNormalize(CliContext& ctx, const std::string& adapter, const std::string& input,
                 const std::string& output, const std::string& depthConvention);
int cmdNegatives(CliContext& ctx, const std::string& input, const std::string& vocabPath,
                 const std::string& proximityPath, const std::string& output,
                 std::uint64_t seed, int maxPerImage, double maxFraction, double hardShare);
int cmdPackage(CliContext& ctx, const std::string& input, const std::string& negativesPath,
               const std::string& mode, const codec::SerializationPolicy& policy,
               const std::string& templatesPath, const std::string& vocabPath,
               std::uint64_t seed, const std::string& output);
int cmdPack(CliContext& ctx, const std::string& input, const std::string& imageMetaPath,
            const std::string& output, long long budget, int perTileTokens, int tileSize,
            int minTiles, int maxTiles);
int cmdEncode(CliContext& ctx, const std::string& input, const std::string& output,
              const codec::SerializationPolicy& policy);
int cmdDecode(CliContext& ctx, const std::string& input, const std::string& output,
              const codec::SerializationPolicy& policy, bool strict, const std::string& format);
int cmdEvaluate(CliContext& ctx, const std::vector<std::string>& gtSpecs,
                const std::string& predPath, const std::string& mode,
                const std::string& thresholdsSpec, const codec::SerializationPolicy& policy,
                const std::string& confidence, const std::string& output, bool printTable,
                const std::string& promptsPath);
int cmdBev(CliContext& ctx, const std::string& input, const std::string& image,
           const std::string& output, const std::string& svgPath);

std::vector<std::string> loadVocabulary(const std::string& path);

}  // namespace cos3d::cli

#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cos3d/common.hpp"
#include "cos3d/packaging.hpp"

namespace cos3d::packing {

inline constexpr long long kDefaultContextBudget = 16384;
inline constexpr int kDefaultTileSize = 448;
inline constexpr int kDefaultMinTiles = 1;
inline constexpr int kDefaultMaxTiles = 12;

struct Tiling {
    int cols = 1;
    int rows = 1;
    bool thumbnail = false;

    int tiles() const { return cols * rows; }
};

// Picks the grid whose aspect ratio is closest to the image's. On exact
// ratio ties a larger grid wins only when the image covers more than half of
// that grid's pixel budget; remaining ties prefer more columns. Thumbnail is
// attached whenever more than one tile is used.
Tiling selectTiling(int width, int height, int tileSize = kDefaultTileSize,
                    int minTiles = kDefaultMinTiles, int maxTiles = kDefaultMaxTiles);

// Crude text-token estimator: letter runs cost ceil(len/6), digits and
// punctuation one each, whitespace is free. Exact tokenizers plug in via
// TokenCountConfig.
int estimateTextTokens(std::string_view text);

struct TokenCountConfig {
    int perTileTokens = 256;
    int frameMarkerTokens = 2;  // image start/end markers
    std::function<int(std::string_view)> textTokenizer;  // estimateTextTokens when empty
};

// visual tokens (when tiled) + text tokens over all turns.
long long tokenCount(const packaging::Conversation& conv, const std::optional<Tiling>& tiling,
                     const TokenCountConfig& cfg = {});

struct PackMember {
    std::string id;
    long long tokenStart = 0;
    long long tokenEnd = 0;
};

struct PackedSample {
    std::vector<PackMember> members;  // boundaries partition [0, totalTokens)
    long long totalTokens = 0;
    bool oversized = false;  // single member larger than the budget, passed through

    std::string toJsonLine(long long packId) const;
};

struct PackItem {
    std::string id;
    long long tokens = 0;
};

// Greedy first-fit in arrival order. Oversized items are emitted alone,
// flagged, and reported; they are never truncated here.
std::vector<PackedSample> packStream(std::span<const PackItem> items, long long contextBudget,
                                     std::vector<Diagnostic>* diagnostics = nullptr);

}  // namespace cos3d::packing

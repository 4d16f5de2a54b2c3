#include "cos3d/packing.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

namespace cos3d::packing {

Tiling selectTiling(int width, int height, int tileSize, int minTiles, int maxTiles) {
    if (width < 1 || height < 1) throw std::invalid_argument("selectTiling: image size must be >= 1");
    if (minTiles < 1 || maxTiles < minTiles)
        throw std::invalid_argument("selectTiling: bad tile bounds");

    const double aspect = static_cast<double>(width) / static_cast<double>(height);
    const double imageArea = static_cast<double>(width) * static_cast<double>(height);
    const double tileArea = static_cast<double>(tileSize) * static_cast<double>(tileSize);

    int bestC = 1, bestR = 1;
    double bestDiff = std::numeric_limits<double>::infinity();
    // Enumerate grids by rising tile count, then rising column count, so the
    // tie rules below see challengers in a fixed order.
    for (int cr = minTiles; cr <= maxTiles; ++cr) {
        for (int c = 1; c <= cr; ++c) {
            if (cr % c != 0) continue;
            const int r = cr / c;
            const double diff = std::abs(static_cast<double>(c) / r - aspect);
            bool take = false;
            if (diff < bestDiff) {
                take = true;
            } else if (diff == bestDiff) {
                const int bestCr = bestC * bestR;
                if (cr > bestCr)
                    take = imageArea > 0.5 * tileArea * cr;  // area-coverage preference
                else if (cr == bestCr)
                    take = c > bestC;
            }
            if (take) {
                bestDiff = diff;
                bestC = c;
                bestR = r;
            }
        }
    }
    return Tiling{bestC, bestR, bestC * bestR > 1};
}

int estimateTextTokens(std::string_view text) {
    int tokens = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        const unsigned char c = static_cast<unsigned char>(text[i]);
        if (std::isspace(c)) {
            ++i;
        } else if (std::isalpha(c)) {
            std::size_t len = 0;
            while (i < text.size() && std::isalpha(static_cast<unsigned char>(text[i]))) {
                ++i;
                ++len;
            }
            tokens += static_cast<int>((len + 5) / 6);
        } else {
            ++tokens;  // digits and punctuation tokenize one by one
            ++i;
        }
    }
    return tokens;
}

long long tokenCount(const packaging::Conversation& conv, const std::optional<Tiling>& tiling,
                     const TokenCountConfig& cfg) {
    long long total = 0;
    if (tiling && tiling->tiles() > 0) {
        const long long visualUnits = tiling->tiles() + (tiling->thumbnail ? 1 : 0);
        total += static_cast<long long>(cfg.perTileTokens) * visualUnits + cfg.frameMarkerTokens;
    }
    for (const auto& turn : conv.turns) {
        total += cfg.textTokenizer ? cfg.textTokenizer(turn.value)
                                   : estimateTextTokens(turn.value);
    }
    return total;
}

std::string PackedSample::toJsonLine(long long packId) const {
    std::string out = "{\"pack_id\":" + std::to_string(packId) + ",\"members\":[";
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (i) out += ',';
        out += "{\"id\":\"" + jsonEscape(members[i].id) +
               "\",\"token_start\":" + std::to_string(members[i].tokenStart) +
               ",\"token_end\":" + std::to_string(members[i].tokenEnd) + "}";
    }
    out += "],\"total_tokens\":" + std::to_string(totalTokens);
    if (oversized) out += ",\"oversized\":true";
    out += "}";
    return out;
}

std::vector<PackedSample> packStream(std::span<const PackItem> items, long long contextBudget,
                                     std::vector<Diagnostic>* diagnostics) {
    if (contextBudget < 1) throw std::invalid_argument("packStream: budget must be >= 1");

    std::vector<PackedSample> packs;
    PackedSample current;

    auto flush = [&]() {
        if (!current.members.empty()) {
            packs.push_back(std::move(current));
            current = PackedSample{};
        }
    };

    for (const PackItem& item : items) {
        if (item.tokens > contextBudget) {
            // Refuse to truncate: pass it through alone and report it.
            flush();
            PackedSample big;
            big.members.push_back({item.id, 0, item.tokens});
            big.totalTokens = item.tokens;
            big.oversized = true;
            packs.push_back(std::move(big));
            if (diagnostics)
                diagnostics->push_back({"warning", item.id,
                                        "conversation of " + std::to_string(item.tokens) +
                                            " tokens exceeds the context budget of " +
                                            std::to_string(contextBudget)});
            continue;
        }
        if (current.totalTokens + item.tokens > contextBudget) flush();
        const long long start = current.totalTokens;
        current.members.push_back({item.id, start, start + item.tokens});
        current.totalTokens += item.tokens;
    }
    flush();
    return packs;
}

}  // namespace cos3d::packing

#include "cos3d/negatives.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "cos3d/embedded_data.hpp"
#include "json.hpp"

namespace cos3d::negatives {

ProximityTable parseProximityTable(std::string_view text) {
    ProximityTable table;
    for (const std::string& line : splitOn(text, '\n')) {
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto tab = t.find('\t');
        if (tab == std::string::npos)
            throw std::invalid_argument("proximity table line lacks a tab: " + t);
        const std::string category = trim(t.substr(0, tab));
        std::vector<std::string> neighbors;
        for (const std::string& n : splitOn(t.substr(tab + 1), ',')) {
            const std::string nt = trim(n);
            if (!nt.empty()) neighbors.push_back(nt);
        }
        table[category] = std::move(neighbors);
    }
    return table;
}

const ProximityTable& defaultProximityTable() {
    static const ProximityTable table = parseProximityTable(embedded::kProximityTsv);
    return table;
}

std::string NegativeStub::toJsonLine() const {
    return "{\"image\":\"" + jsonEscape(imagePath) + "\",\"category\":\"" + jsonEscape(category) +
           "\"}";
}

NegativeStub NegativeStub::fromJsonLine(std::string_view line) {
    const nlohmann::json j = nlohmann::json::parse(line);
    return NegativeStub{j.at("image").get<std::string>(), j.at("category").get<std::string>()};
}

std::size_t negativeBudget(std::size_t positives, double maxFraction) {
    if (maxFraction <= 0) return 0;
    if (maxFraction >= 1) return SIZE_MAX;
    // n <= f (p + n)  <=>  n <= p f / (1 - f)
    return static_cast<std::size_t>(std::floor(static_cast<double>(positives) * maxFraction /
                                               (1.0 - maxFraction)));
}

std::vector<NegativeStub> sampleNegatives(std::span<const ImageCategories> images,
                                          const std::vector<std::string>& vocabulary,
                                          std::size_t positiveExamples, const NegativeSpec& spec) {
    const std::set<std::string> vocab(vocabulary.begin(), vocabulary.end());

    std::vector<NegativeStub> stubs;
    for (const ImageCategories& img : images) {
        const std::set<std::string> present(img.present.begin(), img.present.end());
        for (const std::string& c : present)
            if (!vocab.count(c))
                throw std::invalid_argument("vocabulary does not cover category: " + c);

        std::vector<std::string> candidates;
        for (const std::string& c : vocabulary)
            if (!present.count(c)) candidates.push_back(c);
        if (candidates.empty()) continue;

        const std::size_t draws =
            std::min<std::size_t>(static_cast<std::size_t>(std::max(0, spec.maxPerImage)),
                                  candidates.size());
        if (draws == 0) continue;

        // Hard pool: proximity neighbors of present categories, absent and
        // in-vocabulary only, deduped in rank order.
        std::vector<std::string> hardPool;
        std::set<std::string> seen;
        for (const std::string& c : img.present) {
            const auto it = spec.proximity.find(c);
            if (it == spec.proximity.end()) continue;
            for (const std::string& n : it->second) {
                if (present.count(n) || !vocab.count(n) || seen.count(n)) continue;
                hardPool.push_back(n);
                seen.insert(n);
            }
        }

        Rng rng(deriveSeed(spec.seed, img.imagePath));
        const std::size_t nHard = std::min<std::size_t>(
            static_cast<std::size_t>(std::llround(spec.hardNegativeShare *
                                                  static_cast<double>(draws))),
            hardPool.size());

        std::vector<std::string> drawn;
        std::set<std::string> drawnSet;
        for (std::size_t k = 0; k < nHard; ++k) {
            const std::size_t j = static_cast<std::size_t>(rng.below(hardPool.size()));
            drawn.push_back(hardPool[j]);
            drawnSet.insert(hardPool[j]);
            hardPool.erase(hardPool.begin() + static_cast<std::ptrdiff_t>(j));
        }
        std::vector<std::string> uniformPool;
        for (const std::string& c : candidates)
            if (!drawnSet.count(c)) uniformPool.push_back(c);
        while (drawn.size() < draws && !uniformPool.empty()) {
            const std::size_t j = static_cast<std::size_t>(rng.below(uniformPool.size()));
            drawn.push_back(uniformPool[j]);
            uniformPool.erase(uniformPool.begin() + static_cast<std::ptrdiff_t>(j));
        }
        for (const std::string& c : drawn) stubs.push_back({img.imagePath, c});
    }

    // Corpus-level cap via deterministic reservoir downsampling; survivors
    // keep their input order.
    const std::size_t budget = negativeBudget(positiveExamples, spec.maxFraction);
    if (stubs.size() > budget) {
        Rng rng(deriveSeed(spec.seed, "negatives.downsample"));
        std::vector<std::size_t> reservoir;
        reservoir.reserve(budget);
        for (std::size_t i = 0; i < stubs.size(); ++i) {
            if (i < budget) {
                reservoir.push_back(i);
            } else {
                const std::size_t j = static_cast<std::size_t>(rng.below(i + 1));
                if (j < budget) reservoir[j] = i;
            }
        }
        std::sort(reservoir.begin(), reservoir.end());
        std::vector<NegativeStub> trimmed;
        trimmed.reserve(reservoir.size());
        for (std::size_t i : reservoir) trimmed.push_back(std::move(stubs[i]));
        stubs = std::move(trimmed);
    }
    return stubs;
}

}  // namespace cos3d::negatives

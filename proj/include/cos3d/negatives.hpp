#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cos3d/common.hpp"

namespace cos3d::negatives {

using ProximityTable = std::map<std::string, std::vector<std::string>>;

// Line-delimited `category<TAB>neighbor1,neighbor2,...`.
ProximityTable parseProximityTable(std::string_view text);
const ProximityTable& defaultProximityTable();

struct NegativeSpec {
    double maxFraction = 0.10;      // negatives / (positives + negatives)
    int maxPerImage = 2;
    double hardNegativeShare = 0.5;
    ProximityTable proximity;
    std::uint64_t seed = 0;
};

struct ImageCategories {
    std::string imagePath;
    std::vector<std::string> present;
};

struct NegativeStub {
    std::string imagePath;
    std::string category;  // expected answer is the no-object sentinel

    std::string toJsonLine() const;
    static NegativeStub fromJsonLine(std::string_view line);
};

// Largest negative count that keeps negatives/(positives+negatives) within
// the fraction cap.
std::size_t negativeBudget(std::size_t positives, double maxFraction);

// Per-image draws are independent (seed derived from the image path) and the
// global cap is enforced by a deterministic reservoir pass. Throws
// std::invalid_argument when the vocabulary misses a present category.
std::vector<NegativeStub> sampleNegatives(std::span<const ImageCategories> images,
                                          const std::vector<std::string>& vocabulary,
                                          std::size_t positiveExamples, const NegativeSpec& spec);

}  // namespace cos3d::negatives

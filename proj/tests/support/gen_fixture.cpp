// Writes the deterministic synthetic fixture used by the golden-file tests.
// Run once; the output is reviewed and checked in.
#include <fstream>
#include <iostream>

#include "support/fixture_gen.hpp"

int main(int argc, char** argv) {
    if (argc != 4) {
        std::cerr << "usage: gen_fixture <images> <seed> <output>\n";
        return 2;
    }
    cos3d::testing::FixtureOptions opts;
    opts.images = std::stoul(argv[1]);
    opts.seed = std::stoull(argv[2]);
    std::ofstream out(argv[3], std::ios::binary);
    for (const auto& line : cos3d::testing::syntheticFixtureLines(opts)) out << line << "\n";
    return 0;
}

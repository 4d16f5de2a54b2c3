#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace cos3d {

// One record of a per-record problem report. Pipelines collect these instead
// of aborting on the first bad input line.
struct Diagnostic {
    std::string severity;  // "warning" | "error"
    std::string where;     // file:line, record id, byte offset, ...
    std::string message;

    std::string toJsonLine() const;
};

using DiagnosticSink = std::function<void(const Diagnostic&)>;

// ---------------------------------------------------------------------------
// Deterministic RNG helpers. std::mt19937_64 is bit-exact everywhere, but the
// std distributions are not; all sampling goes through these instead.
// ---------------------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view s);

// Sub-seed for an independent per-record stream (order-independent sampling).
std::uint64_t deriveSeed(std::uint64_t seed, std::string_view key);

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next() { return eng_(); }

    // Uniform in [0,1) with 53 random bits.
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Unbiased uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    // Fisher-Yates in-place shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::mt19937_64 eng_;
};

// ---------------------------------------------------------------------------
// Fixed-decimal formatting. All corpus numbers are written with exactly two
// decimals; rounding is half-away-from-zero and "-0.00" is normalized.
// ---------------------------------------------------------------------------

std::string fixed2(double v);
bool isFixed2Stable(double v);  // fixed2(parse(fixed2(v))) == fixed2(v), used in tests

// JSON string escaping (quotes, backslash, control characters).
std::string jsonEscape(std::string_view s);

// ---------------------------------------------------------------------------
// Line-oriented I/O.
// ---------------------------------------------------------------------------

// Calls fn(line, lineNumber) for every line; strips one trailing '\r'.
void forEachLine(std::istream& in, const std::function<void(std::string_view, std::size_t)>& fn);

std::string readFile(const std::string& path);  // throws std::runtime_error if unreadable

std::string trim(std::string_view s);
std::vector<std::string> splitOn(std::string_view s, char sep);

}  // namespace cos3d

#include "cos3d/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cos3d/common.hpp"

namespace cos3d {

Config Config::fromFile(const std::string& path) { return fromString(readFile(path)); }

Config Config::fromString(std::string_view text) {
    Config cfg;
    std::size_t lineNo = 0;
    for (const std::string& raw : splitOn(text, '\n')) {
        ++lineNo;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineNo) +
                                        " is not key=value: " + line);
        const std::string key = trim(line.substr(0, eq));
        if (key.empty())
            throw std::invalid_argument("config line " + std::to_string(lineNo) + " has no key");
        cfg.values_[key] = trim(line.substr(eq + 1));
    }
    return cfg;
}

std::optional<std::string> Config::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

std::string Config::getOr(const std::string& key, const std::string& fallback) const {
    return get(key).value_or(fallback);
}

double Config::getDouble(const std::string& key, double fallback) const {
    const auto v = get(key);
    return v ? std::stod(*v) : fallback;
}

long long Config::getInt(const std::string& key, long long fallback) const {
    const auto v = get(key);
    return v ? std::stoll(*v) : fallback;
}

std::uint64_t Config::getUint(const std::string& key, std::uint64_t fallback) const {
    const auto v = get(key);
    return v ? std::stoull(*v) : fallback;
}

bool Config::getBool(const std::string& key, bool fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw std::invalid_argument("config key " + key + " is not a boolean: " + *v);
}

}  // namespace cos3d

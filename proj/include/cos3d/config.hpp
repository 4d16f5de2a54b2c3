#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace cos3d {

// Flat key=value configuration ('#' comments, blank lines ignored). Flags
// always win over config values; the CLI applies that precedence.
class Config {
  public:
    Config() = default;

    static Config fromFile(const std::string& path);
    static Config fromString(std::string_view text);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::optional<std::string> get(const std::string& key) const;
    std::string getOr(const std::string& key, const std::string& fallback) const;
    double getDouble(const std::string& key, double fallback) const;
    long long getInt(const std::string& key, long long fallback) const;
    std::uint64_t getUint(const std::string& key, std::uint64_t fallback) const;
    bool getBool(const std::string& key, bool fallback) const;

    const std::map<std::string, std::string>& values() const { return values_; }

  private:
    std::map<std::string, std::string> values_;
};

}  // namespace cos3d

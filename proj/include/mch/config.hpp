#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace mch {

/// Flat `key = value` text grouped under `[section]` headers. Keys are
/// addressed as "section.key"; `#` starts a comment.
class Config {
 public:
  static Config parse(std::istream& in, const std::string& source = "<config>");
  static Config load(const std::filesystem::path& file);

  [[nodiscard]] bool has(const std::string& key) const;
  [[nodiscard]] std::string text(const std::string& key, const std::string& fallback) const;
  [[nodiscard]] double number(const std::string& key, double fallback) const;
  [[nodiscard]] int integer(const std::string& key, int fallback) const;
  [[nodiscard]] bool flag(const std::string& key, bool fallback) const;
  /// Whitespace- or comma-separated numbers.
  [[nodiscard]] std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const;

  void set(const std::string& key, const std::string& value);
  /// Keys never read through an accessor.
  [[nodiscard]] std::vector<std::string> unused() const;
  /// Sorted "key=value" lines; the basis of config hashes.
  [[nodiscard]] std::string canonical() const;
  [[nodiscard]] const std::string& source() const { return source_; }

 private:
  [[nodiscard]] const std::string* find(const std::string& key) const;
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
  std::string source_;
};

}  // namespace mch

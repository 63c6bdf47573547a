#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>

namespace hse {

// Plain "key=value" lines; '#' starts a comment. Keys outside `allowed`
// are rejected with InvalidConfig, as are duplicates.
class RunConfig {
 public:
  explicit RunConfig(std::set<std::string> allowed) : allowed_(std::move(allowed)) {}

  void parse(std::istream& in, const std::string& source = "config");
  void load(const std::filesystem::path& path);
  // Command-line overrides win over file values.
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::optional<std::string> get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::set<std::string> allowed_;
  std::map<std::string, std::string> values_;
};

}  // namespace hse

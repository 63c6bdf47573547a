#include "hse/config.hpp"

#include <fstream>

#include "hse/error.hpp"

namespace hse {
namespace {
std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}
}  // namespace

void RunConfig::parse(std::istream& in, const std::string& source) {
  std::string line;
  int line_no = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidConfig(source + ":" + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (!seen.insert(key).second) {
      throw InvalidConfig(source + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    try {
      set(key, trim(line.substr(eq + 1)));
    } catch (const InvalidConfig& e) {
      throw InvalidConfig(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  parse(in, path.string());
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!allowed_.count(key)) throw InvalidConfig("unknown key '" + key + "'");
  values_[key] = value;
}

std::optional<std::string> RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string RunConfig::get_or(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const double d = std::stod(*v, &used);
    if (used == v->size()) return d;
  } catch (const std::exception&) {
  }
  throw InvalidConfig("key '" + key + "' expects a number, got '" + *v + "'");
}

long long RunConfig::get_int(const std::string& key, long long fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const long long i = std::stoll(*v, &used);
    if (used == v->size()) return i;
  } catch (const std::exception&) {
  }
  throw InvalidConfig("key '" + key + "' expects an integer, got '" + *v + "'");
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  if (*v == "1" || *v == "true" || *v == "yes") return true;
  if (*v == "0" || *v == "false" || *v == "no") return false;
  throw InvalidConfig("key '" + key + "' expects a boolean, got '" + *v + "'");
}

}  // namespace hse

#include "mch/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mch {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    return "";
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& s, const std::string& key) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) {
    throw std::invalid_argument("config key " + key + ": '" + s + "' is not a number");
  }
  return v;
}

}  // namespace

Config Config::parse(std::istream& in, const std::string& source) {
  Config c;
  c.source_ = source;
  std::string section;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      line.erase(hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto where = source + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw std::invalid_argument(where + ": unterminated section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(where + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw std::invalid_argument(where + ": empty key");
    }
    const auto full = section.empty() ? key : section + "." + key;
    if (c.values_.count(full) != 0) {
      throw std::invalid_argument(where + ": duplicate key " + full);
    }
    c.values_[full] = trim(line.substr(eq + 1));
  }
  return c;
}

Config Config::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) {
    throw std::runtime_error("cannot open config " + file.string());
  }
  return parse(in, file.string());
}

const std::string* Config::find(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    return nullptr;
  }
  used_.insert(key);
  return &it->second;
}

bool Config::has(const std::string& key) const { return values_.count(key) != 0; }

std::string Config::text(const std::string& key, const std::string& fallback) const {
  const auto* v = find(key);
  return v != nullptr ? *v : fallback;
}

double Config::number(const std::string& key, double fallback) const {
  const auto* v = find(key);
  return v != nullptr ? to_double(*v, key) : fallback;
}

int Config::integer(const std::string& key, int fallback) const {
  const auto* v = find(key);
  if (v == nullptr) {
    return fallback;
  }
  int out = 0;
  const auto* end = v->data() + v->size();
  const auto r = std::from_chars(v->data(), end, out);
  if (r.ec != std::errc() || r.ptr != end) {
    throw std::invalid_argument("config key " + key + ": '" + *v + "' is not an integer");
  }
  return out;
}

bool Config::flag(const std::string& key, bool fallback) const {
  const auto* v = find(key);
  if (v == nullptr) {
    return fallback;
  }
  if (*v == "true" || *v == "yes" || *v == "1") {
    return true;
  }
  if (*v == "false" || *v == "no" || *v == "0") {
    return false;
  }
  throw std::invalid_argument("config key " + key + ": '" + *v + "' is not a boolean");
}

std::vector<double> Config::numbers(const std::string& key, std::vector<double> fallback) const {
  const auto* v = find(key);
  if (v == nullptr) {
    return fallback;
  }
  std::string s = *v;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream is(s);
  std::vector<double> out;
  std::string tok;
  while (is >> tok) {
    out.push_back(to_double(tok, key));
  }
  return out;
}

void Config::set(const std::string& key, const std::string& value) { values_[key] = value; }

std::vector<std::string> Config::unused() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) {
    if (used_.count(k) == 0) {
      out.push_back(k);
    }
  }
  return out;
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) {
    out += k + "=" + v + "\n";
  }
  return out;
}

}  // namespace mch

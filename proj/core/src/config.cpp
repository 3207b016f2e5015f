#include <cstdlib>
#include <fstream>
#include <sstream>

#include "dpol/errors.hpp"
#include "dpol/harness.hpp"

namespace dpol {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key=value, got '" + t + "'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    cfg.kv_[key] = value;
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string ExperimentConfig::to_text() const {
  std::string out;
  for (const auto& [k, v] : kv_) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  kv_[key] = value;
}

bool ExperimentConfig::has(const std::string& key) const {
  return kv_.count(key) > 0;
}

std::string ExperimentConfig::get_string(const std::string& key) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) throw ConfigError("missing config key: " + key);
  return it->second;
}

std::string ExperimentConfig::get_string(const std::string& key,
                                         const std::string& fallback) const {
  const auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

double ExperimentConfig::get_double(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": not a number: '" + v + "'");
  }
}

double ExperimentConfig::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

size_t ExperimentConfig::get_size(const std::string& key) const {
  const double d = get_double(key);
  if (d < 0 || d != static_cast<double>(static_cast<size_t>(d)))
    throw ConfigError("config key " + key + ": not a nonnegative integer");
  return static_cast<size_t>(d);
}

size_t ExperimentConfig::get_size(const std::string& key, size_t fallback) const {
  return has(key) ? get_size(key) : fallback;
}

bool ExperimentConfig::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get_string(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key " + key + ": not a boolean: '" + v + "'");
}

std::vector<double> ExperimentConfig::get_double_list(const std::string& key) const {
  const std::string v = get_string(key);
  std::vector<double> out;
  std::stringstream ss(v);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      out.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw ConfigError("config key " + key + ": bad list entry '" + cell + "'");
    }
  }
  if (out.empty()) throw ConfigError("config key " + key + ": empty list");
  return out;
}

uint64_t ExperimentConfig::base_seed() const {
  if (const char* env = std::getenv("DPOL_SEED")) {
    try {
      return static_cast<uint64_t>(std::stoull(env));
    } catch (const std::exception&) {
      throw ConfigError("DPOL_SEED is not an integer");
    }
  }
  return static_cast<uint64_t>(get_size("seed", 1));
}

uint64_t fnv1a_hash(const std::string& text) {
  uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace dpol

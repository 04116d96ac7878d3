#include "core/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "core/error.hpp"

namespace farkasnet {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = s.find(',', pos);
    std::string item = trim(s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* b = text.data();
  const char* e = b + text.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e) throw UsageError("config key '" + key + "': cannot parse '" + text + "'");
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

Config Config::parse(const std::string& text) {
  Config cfg;
  std::size_t offset = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t line_start = offset;
    offset += line.size() + 1;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw FormatError("config line without '='", line_start);
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw FormatError("config line with an empty key", line_start);
    cfg.values_[key] = trim(t.substr(eq + 1));
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void Config::set_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw UsageError("expected key=value, got '" + assignment + "'");
  const std::string key = trim(assignment.substr(0, eq));
  if (key.empty()) throw UsageError("empty key in '" + assignment + "'");
  set(key, trim(assignment.substr(eq + 1)));
}

void Config::set(const std::string& key, const std::string& value) { values_[key] = value; }

std::string& Config::raw(const std::string& key, const std::string& fallback) {
  used_[key] = true;
  auto [it, inserted] = values_.try_emplace(key, fallback);
  return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) { return raw(key, fallback); }

double Config::get_double(const std::string& key, double fallback) {
  const double v = parse_number<double>(key, raw(key, format_double(fallback)));
  if (!std::isfinite(v)) throw UsageError("config key '" + key + "' must be finite");
  return v;
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) {
  return parse_number<std::int64_t>(key, raw(key, std::to_string(fallback)));
}

std::uint64_t Config::get_uint(const std::string& key, std::uint64_t fallback) {
  const std::string& text = raw(key, std::to_string(fallback));
  if (!text.empty() && text[0] == '-') throw UsageError("config key '" + key + "' must be non-negative");
  return parse_number<std::uint64_t>(key, text);
}

bool Config::get_bool(const std::string& key, bool fallback) {
  const std::string& text = raw(key, fallback ? "true" : "false");
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw UsageError("config key '" + key + "': expected true or false, got '" + text + "'");
}

std::vector<double> Config::get_doubles(const std::string& key, const std::vector<double>& fallback) {
  std::string joined;
  for (std::size_t i = 0; i < fallback.size(); ++i) joined += (i ? "," : "") + format_double(fallback[i]);
  std::vector<double> out;
  for (const auto& item : split_list(raw(key, joined))) out.push_back(parse_number<double>(key, item));
  return out;
}

std::vector<std::uint64_t> Config::get_uints(const std::string& key, const std::vector<std::uint64_t>& fallback) {
  std::string joined;
  for (std::size_t i = 0; i < fallback.size(); ++i) joined += (i ? "," : "") + std::to_string(fallback[i]);
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(raw(key, joined))) out.push_back(parse_number<std::uint64_t>(key, item));
  return out;
}

std::vector<std::string> Config::get_strings(const std::string& key, const std::vector<std::string>& fallback) {
  std::string joined;
  for (std::size_t i = 0; i < fallback.size(); ++i) joined += (i ? "," : "") + fallback[i];
  return split_list(raw(key, joined));
}

std::vector<std::string> Config::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) {
    if (!used_.count(k)) out.push_back(k);
  }
  return out;
}

std::string Config::to_text() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

}  // namespace farkasnet

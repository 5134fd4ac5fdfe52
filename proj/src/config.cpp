#include "commute/config.hpp"

#include <istream>
#include <sstream>

#include "commute/csv.hpp"
#include "commute/error.hpp"

namespace commute {

KeyValues KeyValues::parse(std::istream& in) {
  KeyValues kv;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = csv::trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_number) + ": expected 'key = value'");
    }
    const auto key = csv::trim(view.substr(0, eq));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(line_number) + ": empty key");
    }
    kv.set(std::string(key), std::string(csv::trim(view.substr(eq + 1))));
  }
  return kv;
}

KeyValues KeyValues::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse(in);
}

void KeyValues::set(std::string key, std::string value) { entries_[std::move(key)] = std::move(value); }

bool KeyValues::has(std::string_view key) const { return entries_.find(key) != entries_.end(); }

std::optional<std::string> KeyValues::take(std::string_view key) {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  consumed_.insert(std::string(key));
  return it->second;
}

void KeyValues::reject_unconsumed(std::string_view what) const {
  std::string unknown;
  for (const auto& [key, value] : entries_) {
    if (consumed_.find(key) == consumed_.end()) {
      if (!unknown.empty()) unknown += ", ";
      unknown += key;
    }
  }
  if (!unknown.empty()) throw ConfigError("unknown " + std::string(what) + " key(s): " + unknown);
}

void KeyValues::merge(const KeyValues& overrides) {
  for (const auto& [key, value] : overrides.entries_) entries_[key] = value;
}

double config_double(std::string_view key, std::string_view value) {
  const auto parsed = csv::parse_double(value);
  if (!parsed) throw ConfigError("key '" + std::string(key) + "': expected a number");
  return *parsed;
}

long long config_int(std::string_view key, std::string_view value) {
  const auto parsed = csv::parse_int(value);
  if (!parsed) throw ConfigError("key '" + std::string(key) + "': expected an integer");
  return *parsed;
}

bool config_bool(std::string_view key, std::string_view value) {
  value = csv::trim(value);
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError("key '" + std::string(key) + "': expected true or false");
}

}  // namespace commute

#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace commute {

// Flat `key = value` text. `#` starts a comment. Keys are kept in sorted
// order so serialization is deterministic.
class KeyValues {
 public:
  static KeyValues parse(std::istream& in);
  static KeyValues parse(std::string_view text);

  void set(std::string key, std::string value);
  bool has(std::string_view key) const;
  const std::map<std::string, std::string, std::less<>>& entries() const { return entries_; }

  // Fetches a key and marks it consumed.
  std::optional<std::string> take(std::string_view key);
  // Throws ConfigError naming every key that was never consumed.
  void reject_unconsumed(std::string_view what) const;

  void merge(const KeyValues& overrides);

 private:
  std::map<std::string, std::string, std::less<>> entries_;
  std::set<std::string, std::less<>> consumed_;
};

// Value parsers; each throws ConfigError naming the key on failure.
double config_double(std::string_view key, std::string_view value);
long long config_int(std::string_view key, std::string_view value);
bool config_bool(std::string_view key, std::string_view value);

}  // namespace commute

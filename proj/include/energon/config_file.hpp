#pragma once

#include <map>
#include <string>

#include "energon/errors.hpp"

namespace energon {

// Minimal INI-style config: "[section]" headers, "key = value" lines,
// '#' or ';' comments. Keys are reported as "section.key".
class ConfigFile {
 public:
  static ConfigFile parse(const std::string& text);
  static ConfigFile load(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key) const;

  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  int get_int(const std::string& section, const std::string& key,
              int fallback) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;

 private:
  std::map<std::string, std::string> values_;  // "section.key" -> value
};

}  // namespace energon

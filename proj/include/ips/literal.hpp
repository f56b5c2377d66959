#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace ips {

std::string trim(std::string_view s);
std::string lower(std::string_view s);

// Splits on sep at nesting depth zero; (), {} and [] nest.
std::vector<std::string> split_top(std::string_view s, char sep);

double parse_double(std::string_view s, std::string_view what);
long long parse_int(std::string_view s, std::string_view what);

// name(a, b, key=value, ...)
struct CallLiteral {
  std::string name;
  std::vector<std::string> positional;
  std::map<std::string, std::string> named;

  bool has(const std::string& k) const { return named.count(k) != 0; }
  std::string get(const std::string& k, const std::string& fallback) const {
    auto it = named.find(k);
    return it == named.end() ? fallback : it->second;
  }
};

CallLiteral parse_call(std::string_view s);

// "%.17g"
std::string fmt_double(double x);
// "%.3f", for elapsed times
std::string seconds_text(double s);

}  // namespace ips

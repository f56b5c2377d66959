#include "ips/literal.hpp"

#include <cctype>
#include <cmath>
#include <charconv>
#include <cstdio>
#include <cstdlib>

#include "ips/error.hpp"

namespace ips {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = char(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> split_top(std::string_view s, char sep) {
  std::vector<std::string> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '(' || c == '{' || c == '[') ++depth;
    else if (c == ')' || c == '}' || c == ']') --depth;
    else if (c == sep && depth == 0) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
    if (depth < 0) throw Error(Errc::ParseError, "unbalanced brackets in '" + std::string(s) + "'");
  }
  if (depth != 0) throw Error(Errc::ParseError, "unbalanced brackets in '" + std::string(s) + "'");
  auto last = trim(s.substr(start));
  if (!last.empty() || !out.empty()) out.push_back(last);
  return out;
}

double parse_double(std::string_view s, std::string_view what) {
  const std::string t = trim(s);
  if (t == "inf" || t == "+inf") return HUGE_VAL;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size())
    throw Error(Errc::ParseError, "expected a number for " + std::string(what) + ", got '" + t + "'");
  return v;
}

long long parse_int(std::string_view s, std::string_view what) {
  const std::string t = trim(s);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    // accept integral floats such as 1e5
    const double d = parse_double(t, what);
    if (d != double(static_cast<long long>(d)))
      throw Error(Errc::ParseError, "expected an integer for " + std::string(what) + ", got '" + t + "'");
    return static_cast<long long>(d);
  }
  return v;
}

CallLiteral parse_call(std::string_view s) {
  const std::string t = trim(s);
  CallLiteral c;
  const auto open = t.find('(');
  if (open == std::string::npos) {
    c.name = lower(t);
    return c;
  }
  if (t.back() != ')') throw Error(Errc::ParseError, "missing ')' in '" + t + "'");
  c.name = lower(trim(std::string_view(t).substr(0, open)));
  const auto inner = std::string_view(t).substr(open + 1, t.size() - open - 2);
  for (const auto& arg : split_top(inner, ',')) {
    if (arg.empty()) continue;
    int depth = 0;
    std::size_t eq = std::string::npos;
    for (std::size_t i = 0; i < arg.size(); ++i) {
      const char ch = arg[i];
      if (ch == '(' || ch == '{' || ch == '[') ++depth;
      else if (ch == ')' || ch == '}' || ch == ']') --depth;
      else if (ch == '=' && depth == 0) {
        eq = i;
        break;
      }
    }
    if (eq == std::string::npos)
      c.positional.push_back(arg);
    else
      c.named[lower(trim(std::string_view(arg).substr(0, eq)))] = trim(std::string_view(arg).substr(eq + 1));
  }
  return c;
}

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string seconds_text(double s) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3f", s);
  return buf;
}

}  // namespace ips

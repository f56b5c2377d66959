#include "ips/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "ips/error.hpp"
#include "ips/literal.hpp"

namespace ips {

namespace {

std::string where(int line, int col) {
  if (line <= 0) return "";
  return "line " + std::to_string(line) + ", column " + std::to_string(col) + ": ";
}

std::vector<int> parse_lattice(const std::string& v) {
  std::vector<int> sides;
  std::size_t start = 0;
  for (;;) {
    const auto x = v.find('x', start);
    sides.push_back(int(parse_int(v.substr(start, x == std::string::npos ? std::string::npos : x - start), "lattice")));
    if (x == std::string::npos) break;
    start = x + 1;
  }
  return sides;
}

std::string format_lattice(const std::vector<int>& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "x" : "") + std::to_string(s[i]);
  return out;
}

bool valid_key(std::string_view k) {
  if (k.empty() || !(std::islower(static_cast<unsigned char>(k[0])) || k[0] == '_')) return false;
  for (char ch : k)
    if (!(std::islower(static_cast<unsigned char>(ch)) || std::isdigit(static_cast<unsigned char>(ch)) || ch == '_'))
      return false;
  return true;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{"command", "model",  "lattice", "init",      "times", "reps",
                                             "seed",    "out",    "probe",   "target",    "u_grid", "tmax",
                                             "densities", "n",    "width",   "dim",       "mode",  "ks",
                                             "snap_prefix"};
  return keys;
}

std::vector<double> parse_grid(std::string_view text) {
  const std::string t = trim(text);
  std::vector<double> out;
  if (t.empty()) return out;
  if (t.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (;;) {
      const auto c = t.find(':', start);
      parts.push_back(t.substr(start, c == std::string::npos ? std::string::npos : c - start));
      if (c == std::string::npos) break;
      start = c + 1;
    }
    if (parts.size() != 3) throw Error(Errc::ParseError, "grid '" + t + "' is not a:b:step");
    const double a = parse_double(parts[0], "grid start"), b = parse_double(parts[1], "grid end"),
                 step = parse_double(parts[2], "grid step");
    if (!(step > 0) || b < a) throw Error(Errc::ParseError, "grid '" + t + "' needs step > 0 and end >= start");
    const auto count = std::int64_t(std::floor((b - a) / step + 1e-9)) + 1;
    for (std::int64_t i = 0; i < count; ++i) out.push_back(a + double(i) * step);
    return out;
  }
  for (const auto& part : split_top(t, ',')) out.push_back(parse_double(part, "list entry"));
  return out;
}

std::string format_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt_double(v[i]);
  return out;
}

void set_config_key(ExperimentConfig& c, const std::string& key, const std::string& value, int line, int col) {
  try {
    if (key == "command") c.command = value;
    else if (key == "model") c.model = value;
    else if (key == "lattice") c.lattice = parse_lattice(value);
    else if (key == "init") c.init = value;
    else if (key == "times") c.times = parse_grid(value);
    else if (key == "reps") c.reps = std::uint64_t(parse_int(value, key));
    else if (key == "seed") c.seed = std::uint64_t(parse_int(value, key));
    else if (key == "out") c.out = value;
    else if (key == "probe") c.probe = value;
    else if (key == "target") c.target = value;
    else if (key == "u_grid") c.u_grid = parse_grid(value);
    else if (key == "tmax") c.tmax = parse_double(value, key);
    else if (key == "densities") c.densities = parse_grid(value);
    else if (key == "n") c.n = int(parse_int(value, key));
    else if (key == "width") c.width = int(parse_int(value, key));
    else if (key == "dim") c.dim = int(parse_int(value, key));
    else if (key == "mode") c.mode = value;
    else if (key == "ks") c.ks = parse_grid(value);
    else if (key == "snap_prefix") c.snap_prefix = value;
    else throw Error(Errc::ConfigError, where(line, col) + "unknown key '" + key + "'");
  } catch (const Error& e) {
    if (e.code() == Errc::ConfigError) throw;
    throw Error(Errc::ConfigError, where(line, col) + "bad value for '" + key + "': " + e.what());
  }
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig c;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::size_t p = 0;
    while (p < raw.size() && std::isspace(static_cast<unsigned char>(raw[p]))) ++p;
    if (p == raw.size() || raw[p] == '#') continue;
    const auto eq = raw.find('=', p);
    if (eq == std::string::npos)
      throw Error(Errc::ConfigError, where(line, int(p) + 1) + "expected key=value");
    const std::string key = trim(std::string_view(raw).substr(p, eq - p));
    if (!valid_key(key)) throw Error(Errc::ConfigError, where(line, int(p) + 1) + "malformed key '" + key + "'");
    if (!seen.insert(key).second)
      throw Error(Errc::ConfigError, where(line, int(p) + 1) + "duplicate key '" + key + "'");
    std::size_t v = eq + 1;
    while (v < raw.size() && std::isspace(static_cast<unsigned char>(raw[v]))) ++v;
    const bool known = std::find(config_keys().begin(), config_keys().end(), key) != config_keys().end();
    set_config_key(c, key, trim(std::string_view(raw).substr(eq + 1)), line, known ? int(v) + 1 : int(p) + 1);
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(Errc::IoError, "cannot read config '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string serialize(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "command=" << c.command << "\n"
    << "model=" << c.model << "\n"
    << "lattice=" << format_lattice(c.lattice) << "\n"
    << "init=" << c.init << "\n"
    << "times=" << format_list(c.times) << "\n"
    << "reps=" << c.reps << "\n"
    << "seed=" << c.seed << "\n"
    << "out=" << c.out << "\n"
    << "probe=" << c.probe << "\n"
    << "target=" << c.target << "\n"
    << "u_grid=" << format_list(c.u_grid) << "\n"
    << "tmax=" << fmt_double(c.tmax) << "\n"
    << "densities=" << format_list(c.densities) << "\n"
    << "n=" << c.n << "\n"
    << "width=" << c.width << "\n"
    << "dim=" << c.dim << "\n"
    << "mode=" << c.mode << "\n"
    << "ks=" << format_list(c.ks) << "\n"
    << "snap_prefix=" << c.snap_prefix << "\n";
  return o.str();
}

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ips

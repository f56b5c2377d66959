#include "ips/table.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "ips/error.hpp"
#include "ips/literal.hpp"

namespace ips {

Cells& Cells::operator<<(const std::string& s) {
  cells_.push_back(s);
  return *this;
}
Cells& Cells::operator<<(double x) { return *this << fmt_double(x); }
Cells& Cells::operator<<(long long x) { return *this << std::to_string(x); }
Cells& Cells::operator<<(unsigned long long x) { return *this << std::to_string(x); }
Cells& Cells::operator<<(const Estimate& e) { return *this << e.mean << e.se; }

void ResultTable::add_column(std::string name, std::string unit) {
  names_.push_back(std::move(name));
  units_.push_back(std::move(unit));
  kinds_.push_back(Kind::Plain);
}

void ResultTable::add_stat(std::string name, std::string unit, std::string se_name) {
  if (se_name.empty()) se_name = name + "_stderr";
  names_.push_back(std::move(name));
  units_.push_back(unit);
  kinds_.push_back(Kind::Stat);
  names_.push_back(std::move(se_name));
  units_.push_back(std::move(unit));
  kinds_.push_back(Kind::Stderr);
}

void ResultTable::add(const Cells& cells) {
  if (cells.cells().size() != names_.size())
    throw Error(Errc::ConfigError, "row has " + std::to_string(cells.cells().size()) + " cells for " +
                                       std::to_string(names_.size()) + " columns");
  rows_.push_back(cells.cells());
}

void ResultTable::set_meta(const std::string& key, const std::string& value) {
  for (auto& [k, v] : meta_)
    if (k == key) {
      v = value;
      return;
    }
  meta_.emplace_back(key, value);
}

std::string ResultTable::meta(const std::string& key) const {
  for (const auto& [k, v] : meta_)
    if (k == key) return v;
  return "";
}

std::string csv_quote(const std::string& cell) {
  if (cell.find_first_of(",\"\r\n") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string ResultTable::data_csv() const {
  std::ostringstream o;
  for (std::size_t i = 0; i < names_.size(); ++i) o << (i ? "," : "") << csv_quote(names_[i]);
  o << "\n";
  for (const auto& r : rows_) {
    for (std::size_t i = 0; i < r.size(); ++i) o << (i ? "," : "") << csv_quote(r[i]);
    o << "\n";
  }
  return o.str();
}

void ResultTable::write(std::ostream& os) const {
  for (const auto& [k, v] : meta_) {
    // multi-line values (the embedded config) get one prefixed line each
    std::istringstream in(v);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
      os << "# " << k << ": " << line << "\n";
      first = false;
    }
    if (first) os << "# " << k << ":\n";
  }
  bool any_unit = false;
  for (const auto& u : units_) any_unit = any_unit || !u.empty();
  if (any_unit) {
    os << "# units: ";
    for (std::size_t i = 0; i < units_.size(); ++i) os << (i ? "," : "") << csv_quote(units_[i]);
    os << "\n";
  }
  os << data_csv();
}

void ResultTable::write_file(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::IoError, "cannot write '" + path + "'");
  write(f);
  if (!f) throw Error(Errc::IoError, "write to '" + path + "' failed");
}

}  // namespace ips

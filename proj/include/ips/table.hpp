#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "ips/stats.hpp"

namespace ips {

inline constexpr const char* kToolVersion = "0.1.0";

/// Row cells in column order; an Estimate contributes its mean and its
/// standard error.
class Cells {
 public:
  Cells& operator<<(const std::string& s);
  Cells& operator<<(const char* s) { return *this << std::string(s); }
  Cells& operator<<(double x);
  Cells& operator<<(long long x);
  Cells& operator<<(unsigned long long x);
  Cells& operator<<(int x) { return *this << static_cast<long long>(x); }
  Cells& operator<<(unsigned x) { return *this << static_cast<unsigned long long>(x); }
  Cells& operator<<(unsigned long x) { return *this << static_cast<unsigned long long>(x); }
  Cells& operator<<(long x) { return *this << static_cast<long long>(x); }
  Cells& operator<<(bool b) { return *this << std::string(b ? "true" : "false"); }
  Cells& operator<<(const Estimate& e);

  const std::vector<std::string>& cells() const { return cells_; }

 private:
  std::vector<std::string> cells_;
};

/// CSV result with a `# key: value` metadata block, a mandatory header row
/// and one row per record. Statistical columns are added in pairs: the
/// estimate followed by its standard error.
class ResultTable {
 public:
  enum class Kind { Plain, Stat, Stderr };

  void add_column(std::string name, std::string unit = "");
  // Adds `name` and then `se_name` (default name + "_stderr").
  void add_stat(std::string name, std::string unit = "", std::string se_name = "");

  // Appends a row; throws if the cell count differs from the column count.
  void add(const Cells& cells);

  void set_meta(const std::string& key, const std::string& value);
  std::string meta(const std::string& key) const;

  const std::vector<std::string>& columns() const { return names_; }
  const std::vector<std::string>& units() const { return units_; }
  const std::vector<Kind>& kinds() const { return kinds_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  const std::vector<std::pair<std::string, std::string>>& metadata() const { return meta_; }

  // Header and data rows only, without metadata.
  std::string data_csv() const;
  void write(std::ostream& os) const;
  void write_file(const std::string& path) const;

 private:
  std::vector<std::string> names_, units_;
  std::vector<Kind> kinds_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::pair<std::string, std::string>> meta_;
};

std::string csv_quote(const std::string& cell);
// Splits one CSV record; handles quoted fields with doubled quotes.
std::vector<std::string> csv_split(const std::string& line);

}  // namespace ips

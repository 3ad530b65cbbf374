#pragma once

// Flat key=value configuration with a closed key set. '#' starts a comment.
// Numbers accept fractions ("1/16"); lists are comma separated.

#include "lphom/types.hpp"

#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lphom {

class UsageError : public Error {
 public:
  using Error::Error;
};

const std::vector<std::string>& config_keys();

class Settings {
 public:
  /// Throws UsageError on an unknown key or a malformed line.
  static Settings parse(std::istream& in, const std::string& source = "config");
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::optional<std::string> text(const std::string& key) const;
  std::optional<double> number(const std::string& key) const;
  std::optional<int> integer(const std::string& key) const;
  std::optional<std::vector<double>> numbers(const std::string& key) const;

 private:
  std::map<std::string, std::string> values_;
};

/// "0.125", "1/8", "1e-3". Throws UsageError.
double parse_number(const std::string& s);
std::vector<double> parse_number_list(const std::string& s);

}  // namespace lphom

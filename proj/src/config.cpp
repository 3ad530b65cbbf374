#include "lphom/config.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lphom {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_plain(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw UsageError("not a number: '" + s + "'");
  }
  if (used != s.size() || !std::isfinite(v)) throw UsageError("not a number: '" + s + "'");
  return v;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "scenario", "epsilon_list", "eps",  "r",      "cells_per_eps", "Nc",    "H",     "nGamma", "T",
      "dt",       "dt_rule",      "outdir", "mu1",  "mu2",           "mu3",   "kappa1", "kappa2", "kappa3",
      "alpha",    "beta",         "dl",   "df",     "db",            "radius", "l0_amp", "geometry", "threads",
      "cg_tol",   "points",       "m_y",  "tensors"};
  return keys;
}

Settings Settings::parse(std::istream& in, const std::string& source) {
  Settings s;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(source + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    try {
      s.set(key, trim(line.substr(eq + 1)));
    } catch (const UsageError& e) {
      throw UsageError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return s;
}

void Settings::set(const std::string& key, const std::string& value) {
  const auto& keys = config_keys();
  if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw UsageError("unknown key '" + key + "'");
  if (value.empty()) throw UsageError("empty value for '" + key + "'");
  values_[key] = value;
}

std::optional<std::string> Settings::text(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::optional<double> Settings::number(const std::string& key) const {
  const auto t = text(key);
  if (!t) return std::nullopt;
  try {
    return parse_number(*t);
  } catch (const UsageError& e) {
    throw UsageError(key + ": " + e.what());
  }
}

std::optional<int> Settings::integer(const std::string& key) const {
  const auto v = number(key);
  if (!v) return std::nullopt;
  if (*v != std::round(*v) || std::abs(*v) > 1e9) throw UsageError(key + ": expected an integer");
  return static_cast<int>(*v);
}

std::optional<std::vector<double>> Settings::numbers(const std::string& key) const {
  const auto t = text(key);
  if (!t) return std::nullopt;
  try {
    return parse_number_list(*t);
  } catch (const UsageError& e) {
    throw UsageError(key + ": " + e.what());
  }
}

double parse_number(const std::string& raw) {
  const std::string s = trim(raw);
  if (const auto slash = s.find('/'); slash != std::string::npos) {
    const double num = parse_plain(trim(s.substr(0, slash)));
    const double den = parse_plain(trim(s.substr(slash + 1)));
    if (den == 0.0) throw UsageError("division by zero in '" + s + "'");
    return num / den;
  }
  return parse_plain(s);
}

std::vector<double> parse_number_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(item));
  if (out.empty()) throw UsageError("empty list");
  return out;
}

}  // namespace lphom

#ifndef WFVI_IO_CONFIG_HPP
#define WFVI_IO_CONFIG_HPP

#include <wfvi/io/csv_table.hpp>

#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace wfvi {

/**
 * Flat `key = value` settings. Keys may be dotted ("fit.batch_size"); `#`
 * starts a comment; later assignments override earlier ones. Every lookup
 * marks the key as used so callers can reject typos with unused_keys().
 */
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(std::istream& in, const std::string& source) {
    KeyValueConfig c;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos)
        line.erase(hash);
      const std::string body = trim(line);
      if (body.empty())
        continue;
      const auto eq = body.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error(source + ":" + std::to_string(line_no)
                                 + ": expected 'key = value'");
      const std::string key = trim(body.substr(0, eq));
      if (key.empty())
        throw std::runtime_error(source + ":" + std::to_string(line_no)
                                 + ": empty key");
      c.set(key, trim(body.substr(eq + 1)));
    }
    return c;
  }

  /// @throw std::runtime_error naming the path if it cannot be opened
  static KeyValueConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
      throw std::runtime_error("cannot open '" + path + "'");
    return parse(in, path);
  }

  void set(const std::string& key, const std::string& value) {
    values_[key] = value;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::optional<std::string> get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end())
      return std::nullopt;
    used_.insert(key);
    return it->second;
  }

  std::string get_string(const std::string& key, const std::string& def) const {
    return get(key).value_or(def);
  }

  /// @throw std::runtime_error if the key is absent
  std::string require(const std::string& key) const {
    auto v = get(key);
    if (!v)
      throw std::runtime_error("missing setting '" + key + "'");
    return *v;
  }

  double get_double(const std::string& key, double def) const {
    const auto v = get(key);
    if (!v)
      return def;
    const auto x = detail::try_parse_double(*v);
    if (!x)
      throw std::runtime_error("setting '" + key + "': '" + *v
                               + "' is not a number");
    return *x;
  }

  long long get_int(const std::string& key, long long def) const {
    const auto v = get(key);
    if (!v)
      return def;
    long long x = 0;
    const auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), x);
    if (ec != std::errc() || p != v->data() + v->size())
      throw std::runtime_error("setting '" + key + "': '" + *v
                               + "' is not an integer");
    return x;
  }

  std::uint64_t get_seed(const std::string& key) const {
    const std::string v = require(key);
    std::uint64_t x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size())
      throw std::runtime_error("setting '" + key + "': '" + v
                               + "' is not an unsigned integer");
    return x;
  }

  bool get_bool(const std::string& key, bool def) const {
    const auto v = get(key);
    if (!v)
      return def;
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on")
      return true;
    if (*v == "false" || *v == "0" || *v == "no" || *v == "off")
      return false;
    throw std::runtime_error("setting '" + key + "': '" + *v
                             + "' is not a boolean");
  }

  /// Comma-separated list; empty when absent.
  std::vector<std::string> get_list(const std::string& key) const {
    std::vector<std::string> out;
    const auto v = get(key);
    if (!v || v->empty())
      return out;
    for (auto f : detail::split_csv_line(*v))
      out.emplace_back(f);
    return out;
  }

  std::vector<std::string> unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_)
      if (!used_.count(k))
        out.push_back(k);
    return out;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

  /// Canonical text form, keys sorted.
  std::string dump() const {
    std::string s;
    for (const auto& [k, v] : values_)
      s += k + " = " + v + "\n";
    return s;
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
      return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

}  // namespace wfvi

#endif

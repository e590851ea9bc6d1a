#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace stsccl {

// Flat `section.key = value` configuration, one assignment per line.
// '#' starts a comment; blank lines ignored.
class Config {
 public:
  static Config load(const std::string& path);
  static Config from_string(const std::string& text);

  bool has(const std::string& key) const;
  std::string str(const std::string& key, const std::string& fallback) const;
  double num(const std::string& key, double fallback) const;
  int64_t integer(const std::string& key, int64_t fallback) const;
  void set(const std::string& key, const std::string& value);
  void set_num(const std::string& key, double value);

  // Sorted canonical text; stable across load order.
  std::string canonical() const;
  // FNV-1a over the canonical text, hex string.
  std::string hash() const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace stsccl

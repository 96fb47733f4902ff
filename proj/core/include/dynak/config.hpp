#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "dynak/dataset.hpp"
#include "dynak/trainer.hpp"

namespace dynak {

/// Flat `key = value` configuration shared by every command. Lines starting
/// with '#' are comments. Only the keys listed by `Config::keys()` are
/// accepted, and each value must parse as the key's declared type.
class Config {
 public:
  enum class Type { kString, kInt, kDouble, kBool };

  struct Key {
    std::string_view name;
    Type type;
    std::string_view default_value;
    std::string_view help;
  };

  static std::span<const Key> keys();

  static Config parse(std::istream& in, std::string_view origin = "<config>");
  static Config load(const std::filesystem::path& path);

  /// Throws ConfigError for unknown keys or ill-typed values.
  void set(std::string_view key, std::string_view value);
  /// Applies a `key=value` command-line override.
  void apply_override(std::string_view assignment);

  bool is_set(std::string_view key) const;
  std::string get_string(std::string_view key) const;
  std::int64_t get_int(std::string_view key) const;
  std::size_t get_size(std::string_view key) const;
  double get_double(std::string_view key) const;
  bool get_bool(std::string_view key) const;

  /// Every key with its effective value, one `key = value` per line.
  std::string dump() const;

 private:
  std::string raw(std::string_view key) const;

  std::map<std::string, std::string, std::less<>> values_;
};

TrainConfig train_config(const Config& config);
TafengColumns tafeng_columns(const Config& config);

}  // namespace dynak

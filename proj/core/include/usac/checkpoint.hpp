#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>

#include <Eigen/Core>

#include "usac/nn.hpp"

namespace usac {

/// Ordered key -> value map persisted as versioned plain text (see docs/formats.md).
/// Reals are written in shortest round-trip form, so save/load is lossless.
class Checkpoint {
 public:
  static constexpr int kFormatVersion = 1;

  using Value = std::variant<Eigen::MatrixXd, double, std::int64_t, std::string>;

  void put_tensor(const std::string& key, Eigen::MatrixXd value);
  void put_real(const std::string& key, double value);
  void put_int(const std::string& key, std::int64_t value);
  void put_text(const std::string& key, std::string value);

  bool contains(const std::string& key) const { return entries_.count(key) != 0; }
  const Eigen::MatrixXd& tensor(const std::string& key) const;
  double real(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  const std::string& text(const std::string& key) const;
  const std::map<std::string, Value>& entries() const { return entries_; }

  /// Layer i is stored as "<prefix>/weight/<i>" and "<prefix>/bias/<i>".
  void put_params(const std::string& prefix, const nn::Parameters& params);
  nn::Parameters params(const std::string& prefix) const;

  void put_adam(const std::string& prefix, const nn::AdamState& state);
  nn::AdamState adam(const std::string& prefix) const;
  void put_scalar_adam(const std::string& prefix, const nn::ScalarAdamState& state);
  nn::ScalarAdamState scalar_adam(const std::string& prefix) const;

  /// Copies every entry of `other` under "<prefix>/<key>".
  void merge(const std::string& prefix, const Checkpoint& other);
  /// Entries under "<prefix>/" with the prefix removed.
  Checkpoint extract(const std::string& prefix) const;

  std::string serialize() const;
  static Checkpoint parse(const std::string& text);

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

  /// Bitwise equality of all entries (NaN payloads included).
  bool operator==(const Checkpoint& other) const;

 private:
  template <typename T>
  const T& get(const std::string& key, const char* kind) const;

  std::map<std::string, Value> entries_;
};

/// Shortest round-trip decimal form of a double.
std::string format_real(double value);
/// Inverse of format_real; throws ContractError on malformed input.
double parse_real(const std::string& text);

}  // namespace usac

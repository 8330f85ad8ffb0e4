#pragma once

#include <cstdint>
#include <random>
#include <string>

#include <Eigen/Core>

namespace usac {

/// Seeded random stream. Every consumer in a run owns its own instance so
/// that runs are reproducible and independent of scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }
  Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols);

  std::mt19937_64& engine() { return engine_; }

  /// Full generator state, including the cached normal deviate.
  std::string serialize() const;
  static Rng deserialize(const std::string& text);

  bool operator==(const Rng& other) const {
    return engine_ == other.engine_ && normal_ == other.normal_;
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace usac

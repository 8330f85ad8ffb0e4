#include "usac/rng.hpp"

#include <sstream>

#include "usac/errors.hpp"

namespace usac {

Eigen::MatrixXd Rng::normal_matrix(Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  // column-major fill keeps the draw order identical to per-sample loops
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = normal();
  return m;
}

std::string Rng::serialize() const {
  std::ostringstream os;
  os << engine_ << ' ' << normal_;
  return os.str();
}

Rng Rng::deserialize(const std::string& text) {
  Rng rng;
  std::istringstream is(text);
  is >> rng.engine_ >> rng.normal_;
  if (!is) throw ContractError("Rng::deserialize: malformed generator state");
  return rng;
}

}  // namespace usac

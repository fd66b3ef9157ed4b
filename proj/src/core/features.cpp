#include "adaptnav/core/features.hpp"

#include <stdexcept>

#include "adaptnav/core/rng.hpp"

namespace adaptnav {

Eigen::VectorXd normalize(const Eigen::VectorXd& v) {
  double n = v.norm();
  if (n < 1e-12) throw std::invalid_argument("normalize: zero-norm vector");
  return v / n;
}

Eigen::VectorXd label_direction(uint64_t label_seed, const std::string& label,
                                int dim) {
  Rng rng(seed_combine(label_seed, hash_str(label)));
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = rng.normal();
  return normalize(v);
}

Eigen::VectorXd unit_noise(uint64_t seed, int dim) {
  Rng rng(seed_combine(seed, 0x6e6f697365ULL));  // "noise"
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = rng.normal();
  return normalize(v);
}

}  // namespace adaptnav

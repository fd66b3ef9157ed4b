#include "adaptnav/nn/params.hpp"

#include <cmath>
#include <stdexcept>

namespace adaptnav::nn {

Tensor& ParamStore::create(const std::string& name, Mat init) {
  auto [it, inserted] = tensors_.emplace(name, Tensor(std::move(init)));
  if (!inserted)
    throw std::invalid_argument("params: duplicate tensor '" + name + "'");
  return it->second;
}

Tensor& ParamStore::create_gaussian(const std::string& name, int rows, int cols,
                                    double stddev, Rng& rng) {
  Mat init(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) init(r, c) = stddev * rng.normal();
  return create(name, std::move(init));
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end())
    throw std::invalid_argument("params: unknown tensor '" + name + "'");
  return it->second;
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end())
    throw std::invalid_argument("params: unknown tensor '" + name + "'");
  return it->second;
}

bool ParamStore::has(const std::string& name) const {
  return tensors_.count(name) > 0;
}

void ParamStore::zero_grad() {
  for (auto& [name, t] : tensors_) t.grad.setZero();
}

void ParamStore::adamw_step(double lr, double beta1, double beta2, double eps,
                            double weight_decay) {
  ++step_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_));
  for (auto& [name, t] : tensors_) {
    t.m = beta1 * t.m + (1.0 - beta1) * t.grad;
    t.v = beta2 * t.v.array().matrix() +
          (1.0 - beta2) * t.grad.array().square().matrix();
    Mat m_hat = t.m / bc1;
    Mat v_hat = t.v / bc2;
    t.value -=
        lr * (m_hat.array() / (v_hat.array().sqrt() + eps)).matrix() +
        (lr * weight_decay) * t.value;
  }
}

double ParamStore::clip_grad_norm(double max_norm) {
  double sq = 0.0;
  for (const auto& [name, t] : tensors_) sq += t.grad.squaredNorm();
  double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    double scale = max_norm / norm;
    for (auto& [name, t] : tensors_) t.grad *= scale;
  }
  return norm;
}

int64_t ParamStore::parameter_count() const {
  int64_t n = 0;
  for (const auto& [name, t] : tensors_) n += t.value.size();
  return n;
}

}  // namespace adaptnav::nn

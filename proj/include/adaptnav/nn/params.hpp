#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>

#include "adaptnav/core/rng.hpp"

namespace adaptnav::nn {

using Mat = Eigen::MatrixXd;

// A named trainable tensor with its gradient and AdamW moment buffers.
struct Tensor {
  Mat value;
  Mat grad;
  Mat m;
  Mat v;

  explicit Tensor(Mat init)
      : value(std::move(init)),
        grad(Mat::Zero(value.rows(), value.cols())),
        m(Mat::Zero(value.rows(), value.cols())),
        v(Mat::Zero(value.rows(), value.cols())) {}
};

// Flat store of named parameters. Iteration order is lexicographic by name,
// which makes serialization and the optimizer step deterministic.
class ParamStore {
 public:
  // Creates a tensor; throws std::invalid_argument when the name exists.
  Tensor& create(const std::string& name, Mat init);

  // Creates with Gaussian init scaled by `stddev` (Xavier-style callers pass
  // 1/sqrt(fan_in)); deterministic in (rng).
  Tensor& create_gaussian(const std::string& name, int rows, int cols,
                          double stddev, Rng& rng);

  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool has(const std::string& name) const;

  void zero_grad();

  // Decoupled-weight-decay Adam: m/v moments with bias correction, then
  // value -= lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * value).
  void adamw_step(double lr, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8, double weight_decay = 0.0);

  // Global L2 clip over the concatenation of all gradients; no-op when
  // max_norm <= 0 or the norm is under the threshold.
  double clip_grad_norm(double max_norm);

  int64_t step_count() const { return step_; }
  size_t size() const { return tensors_.size(); }
  int64_t parameter_count() const;

  std::map<std::string, Tensor>& tensors() { return tensors_; }
  const std::map<std::string, Tensor>& tensors() const { return tensors_; }

 private:
  std::map<std::string, Tensor> tensors_;
  int64_t step_ = 0;
};

}  // namespace adaptnav::nn

#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "adaptnav/nn/params.hpp"

namespace adaptnav::nn {

class Graph;

// Handle to a node on a Graph's tape. Cheap to copy; valid as long as the
// owning Graph lives.
class Var {
 public:
  Var() = default;
  const Mat& val() const;
  const Mat& grad() const;
  Eigen::Index rows() const { return val().rows(); }
  Eigen::Index cols() const { return val().cols(); }
  double scalar() const;  // value of a 1x1 node
  bool valid() const { return g_ != nullptr; }

 private:
  friend class Graph;
  Var(Graph* g, int idx) : g_(g), idx_(idx) {}
  Graph* g_ = nullptr;
  int idx_ = -1;
};

// Reverse-mode autodiff tape over dense double matrices. One Graph per
// forward/backward pass; gradients of parameter leaves accumulate into the
// ParamStore they were pulled from.
class Graph {
 public:
  // grad_enabled=false builds a forward-only tape (parameters enter as
  // constants; no backward closures are recorded) — used for evaluation.
  explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Leaves -----------------------------------------------------------------
  Var input(Mat value);  // constant, no gradient
  Var param(ParamStore& store, const std::string& name);

  // Runs reverse accumulation from a 1x1 loss node, then adds parameter-leaf
  // gradients into their ParamStore tensors. Callable once per graph.
  void backward(const Var& loss);

  // Ops ----------------------------------------------------------------------
  Var matmul(Var a, Var b);
  Var add(Var a, Var b);            // same shape
  Var sub(Var a, Var b);            // same shape
  Var mul(Var a, Var b);            // elementwise, same shape
  Var scale(Var a, double s);
  Var add_scalar(Var a, double s);
  Var add_rowvec(Var a, Var rv);    // rv is 1 x cols, added to every row
  Var concat_rows(const std::vector<Var>& parts);
  Var concat_cols(const std::vector<Var>& parts);
  Var slice_rows(Var a, int r0, int n);
  Var slice_cols(Var a, int c0, int n);
  Var transpose(Var a);
  // Row-wise masked softmax. `valid` (same shape, entries 0/1) marks live
  // slots; masked slots get exactly zero weight. Throws on an all-masked row.
  Var softmax_rows(Var logits, const Mat* valid = nullptr);
  Var layer_norm_rows(Var x, Var gamma, Var beta, double eps = 1e-5);
  Var gelu(Var a);   // exact erf form
  Var tanh_(Var a);
  Var log_(Var a);
  Var exp_(Var a);
  Var sum_all(Var a);       // 1x1
  Var mean_all(Var a);      // 1x1
  Var squared_norm(Var a);  // 1x1, sum of squared entries
  Var mean_rows(Var a);     // 1 x cols, column means
  Var pick(Var a, int r, int c);  // 1x1
  Var row(Var a, int r);          // 1 x cols
  Var scale_by(Var a, Var s);     // s is 1x1
  Var mul_colvec(Var a, Var cv);  // cv is rows x 1, scales each row of a
  Var embedding(Var table, const std::vector<int>& ids);  // ids.size() x dim

  size_t node_count() const { return nodes_.size(); }

 private:
  friend class Var;
  struct Node {
    Mat value;
    Mat grad;
    std::function<void()> back;  // empty for leaves/constants
    bool requires_grad = false;
  };

  Var make(Mat value, bool requires_grad);
  Node& node(int i) { return nodes_[i]; }
  const Node& node(int i) const { return nodes_[i]; }
  Mat& grad_of(int i) { return nodes_[i].grad; }
  const Mat& val_of(int i) const { return nodes_[i].value; }
  bool rg(const Var& v) const { return nodes_[v.idx_].requires_grad; }
  static void check(bool cond, const std::string& msg);

  std::vector<Node> nodes_;
  struct ParamRef {
    int node;
    Tensor* tensor;
  };
  std::vector<ParamRef> param_refs_;
  bool grad_enabled_ = true;
  bool backward_done_ = false;
};

}  // namespace adaptnav::nn

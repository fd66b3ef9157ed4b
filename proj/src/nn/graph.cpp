#include "adaptnav/nn/graph.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace adaptnav::nn {

const Mat& Var::val() const {
  if (!g_) throw std::logic_error("graph: use of empty Var");
  return g_->val_of(idx_);
}

const Mat& Var::grad() const {
  if (!g_) throw std::logic_error("graph: use of empty Var");
  const auto& n = g_->node(idx_);
  if (!n.requires_grad || n.grad.size() == 0)
    throw std::logic_error("graph: no gradient on this node");
  return n.grad;
}

double Var::scalar() const {
  const Mat& v = val();
  if (v.rows() != 1 || v.cols() != 1)
    throw std::logic_error("graph: scalar() on non-1x1 node");
  return v(0, 0);
}

void Graph::check(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument("graph: " + msg);
}

Var Graph::make(Mat value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Graph::input(Mat value) { return make(std::move(value), false); }

Var Graph::param(ParamStore& store, const std::string& name) {
  Tensor& t = store.get(name);
  if (!grad_enabled_) return make(t.value, false);
  Var v = make(t.value, true);
  param_refs_.push_back({v.idx_, &t});
  return v;
}

void Graph::backward(const Var& loss) {
  check(loss.g_ == this, "backward: loss from another graph");
  check(!backward_done_, "backward: already run on this graph");
  const Mat& lv = val_of(loss.idx_);
  check(lv.rows() == 1 && lv.cols() == 1, "backward: loss must be 1x1");
  if (!std::isfinite(lv(0, 0)))
    throw std::runtime_error("graph: non-finite loss value");
  backward_done_ = true;
  if (!nodes_[loss.idx_].requires_grad) return;  // constant loss: nothing to do
  for (auto& n : nodes_) {
    if (n.requires_grad) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
  }
  nodes_[loss.idx_].grad(0, 0) = 1.0;
  for (int i = loss.idx_; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.requires_grad && n.back) n.back();
  }
  for (const auto& ref : param_refs_) {
    ref.tensor->grad += nodes_[ref.node].grad;
  }
}

// ---------------------------------------------------------------------------

Var Graph::matmul(Var a, Var b) {
  check(a.cols() == b.rows(), "matmul: inner dimensions differ");
  Var out = make(a.val() * b.val(), rg(a) || rg(b));
  if (!nodes_[out.idx_].requires_grad) return out;
  int ai = a.idx_, bi = b.idx_, oi = out.idx_;
  bool ga = rg(a), gb = rg(b);
  nodes_[oi].back = [this, ai, bi, oi, ga, gb] {
    const Mat& go = grad_of(oi);
    if (ga) grad_of(ai) += go * val_of(bi).transpose();
    if (gb) grad_of(bi) += val_of(ai).transpose() * go;
  };
  return out;
}

Var Graph::add(Var a, Var b) {
  check(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
  Var out = make(a.val() + b.val(), rg(a) || rg(b));
  if (!nodes_[out.idx_].requires_grad) return out;
  int ai = a.idx_, bi = b.idx_, oi = out.idx_;
  bool ga = rg(a), gb = rg(b);
  nodes_[oi].back = [this, ai, bi, oi, ga, gb] {
    if (ga) grad_of(ai) += grad_of(oi);
    if (gb) grad_of(bi) += grad_of(oi);
  };
  return out;
}

Var Graph::sub(Var a, Var b) {
  check(a.rows() == b.rows() && a.cols() == b.cols(), "sub: shape mismatch");
  Var out = make(a.val() - b.val(), rg(a) || rg(b));
  if (!nodes_[out.idx_].requires_grad) return out;
  int ai = a.idx_, bi = b.idx_, oi = out.idx_;
  bool ga = rg(a), gb = rg(b);
  nodes_[oi].back = [this, ai, bi, oi, ga, gb] {
    if (ga) grad_of(ai) += grad_of(oi);
    if (gb) grad_of(bi) -= grad_of(oi);
  };
  return out;
}

Var Graph::mul(Var a, Var b) {
  check(a.rows() == b.rows() && a.cols() == b.cols(), "mul: shape mismatch");
  Var out = make(a.val().cwiseProduct(b.val()), rg(a) || rg(b));
  if (!nodes_[out.idx_].requires_grad) return out;
  int ai = a.idx_, bi = b.idx_, oi = out.idx_;
  bool ga = rg(a), gb = rg(b);
  nodes_[oi].back = [this, ai, bi, oi, ga, gb] {
    const Mat& go = grad_of(oi);
    if (ga) grad_of(ai) += go.cwiseProduct(val_of(bi));
    if (gb) grad_of(bi) += go.cwiseProduct(val_of(ai));
  };
  return out;
}

Var Graph::scale(Var a, double s) {
  Var out = make(a.val() * s, rg(a));
  if (!nodes_[out.idx_].requires_grad) return out;
  int ai = a.idx_, oi = out.idx_;
  nodes_[oi].back = [this, ai, oi, s] { grad_of(ai) += s * grad_of(oi); };
  return out;
}

Var Graph::add_scalar(Var a, double s) {
  Var out = make((a.val().array() + s).matrix(), rg(a));
  if (!nodes_[out.idx_].requires_grad) return out;
  int ai = a.idx_, oi = out.idx_;
  nodes_[oi].back = [this, ai, oi] { grad_of(ai) += grad_of(oi); };
  return out;
}

Var Graph::add_rowvec(Var a, Var rv) {
  check(rv.rows() == 1 && rv.cols() == a.cols(), "add_rowvec: shape mismatch");
  Mat v = a.val();
  v.rowwise() += rv.val().row(0);
  Var out = make(std::move(v), rg(a) || rg(rv));
  if (!nodes_[out.idx_].requires_grad) return out;
  int ai = a.idx_, ri = rv.idx_, oi = out.idx_;
  bool ga = rg(a), gr = rg(rv);
  nodes_[oi].back = [this, ai, ri, oi, ga, gr] {
    const Mat& go = grad_of(oi);
    if (ga) grad_of(ai) += go;
    if (gr) grad_of(ri) += go.colwise().sum();
  };
  return out;
}

Var Graph::concat_rows(const std::vector<Var>& parts) {
  check(!parts.empty(), "concat_rows: empty part list");
  Eigen::Index cols = parts[0].cols(), rows = 0;
  bool any_grad = false;
  for (const auto& p : parts) {
    check(p.cols() == cols, "concat_rows: column mismatch");
    rows += p.rows();
    any_grad = any_grad || rg(p);
  }
  Mat v(rows, cols);
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    v.middleRows(r, p.rows()) = p.val();
    r += p.rows();
  }
  Var out = make(std::move(v), any_grad);
  if (!any_grad) return out;
  std::vector<int> idx;
  std::vector<bool> g;
  for (const auto& p : parts) {
    idx.push_back(p.idx_);
    g.push_back(rg(p));
  }
  int oi = out.idx_;
  nodes_[oi].back = [this, idx, g, oi] {
    const Mat& go = grad_of(oi);
    Eigen::Index r = 0;
    for (size_t k = 0; k < idx.size(); ++k) {
      Eigen::Index n = val_of(idx[k]).rows();
      if (g[k]) grad_of(idx[k]) += go.middleRows(r, n);
      r += n;
    }
  };
  return out;
}

Var Graph::concat_cols(const std::vector<Var>& parts) {
  check(!parts.empty(), "concat_cols: empty part list");
  Eigen::Index rows = parts[0].rows(), cols = 0;
  bool any_grad = false;
  for (const auto& p : parts) {
    check(p.rows() == rows, "concat_cols: row mismatch");
    cols += p.cols();
    any_grad = any_grad || rg(p);
  }
  Mat v(rows, cols);
  Eigen::Index c = 0;
  for (const auto& p : parts) {
    v.middleCols(c, p.cols()) = p.val();
    c += p.cols();
  }
  Var out = make(std::move(v), any_grad);
  if (!any_grad) return out;
  std::vector<int> idx;
  std::vector<bool> g;
  for (const auto& p : parts) {
    idx.push_back(p.idx_);
    g.push_back(rg(p));
  }
  int oi = out.idx_;
  nodes_[oi].back = [this, idx, g, oi] {
    const Mat& go = grad_of(oi);
    Eigen::Index c = 0;
    for (size_t k = 0; k < idx.size(); ++k) {
      Eigen::Index n = val_of(idx[k]).cols();
      if (g[k]) grad_of(idx[k]) += go.middleCols(c, n);
      c += n;
    }
  };
  return out;
}

Var Graph::slice_rows(Var a, int r0, int n) {
  check(r0 >= 0 && n >= 0 && r0 + n <= a.rows(), "slice_rows: out of range");
  Var out = make(a.val().middleRows(r0, n), rg(a));
  if (!nodes_[out.idx_].requires_grad) return out;
  int ai = a.idx_, oi = out.idx_;
  nodes_[oi].back = [this, ai, oi, r0, n] {
    grad_of(ai).middleRows(r0, n) += grad_of(oi);
  };
  return out;
}

Var Graph::slice_cols(Var a, int c0, int n) {
  check(c0 >= 0 && n >= 0 && c0 + n <= a.cols(), "slice_cols: out of range");
  Var out = make(a.val().middleCols(c0, n), rg(a));
  if (!nodes_[out.idx_].requires_grad) return out;
  int ai = a.idx_, oi = out.idx_;
  nodes_[oi].back = [this, ai, oi, c0, n] {
    grad_of(ai).middleCols(c0, n) += grad_of(oi);
  };
  return out;
}

Var Graph::transpose(Var a) {
  Var out = make(a.val().transpose(), rg(a));
  if (!nodes_[out.idx_].requires_grad) return out;
  int ai = a.idx_, oi = out.idx_;
  nodes_[oi].back = [this, ai, oi] {
    grad_of(ai) += grad_of(oi).transpose();
  };
  return out;
}

Var Graph::softmax_rows(Var logits, const Mat* valid) {
  const Mat& z = logits.val();
  if (valid) {
    check(valid->rows() == z.rows() && valid->cols() == z.cols(),
          "softmax_rows: mask shape mismatch");
  }
  Mat y(z.rows(), z.cols());
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
      if (!valid || (*valid)(r, c) != 0.0) mx = std::max(mx, z(r, c));
    }
    if (!std::isfinite(mx))
      throw std::invalid_argument("graph: softmax row fully masked");
    double sum = 0.0;
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
      double e = (!valid || (*valid)(r, c) != 0.0) ? std::exp(z(r, c) - mx) : 0.0;
      y(r, c) = e;
      sum += e;
    }
    y.row(r) /= sum;
  }
  Var out = make(std::move(y), rg(logits));
  if (!nodes_[out.idx_].requires_grad) return out;
  int ai = logits.idx_, oi = out.idx_;
  nodes_[oi].back = [this, ai, oi] {
    const Mat& yv = val_of(oi);
    const Mat& go = grad_of(oi);
    Mat& ga = grad_of(ai);
    for (Eigen::Index r = 0; r < yv.rows(); ++r) {
      double dot = go.row(r).dot(yv.row(r));
      ga.row(r) += (yv.row(r).array() * (go.row(r).array() - dot)).matrix();
    }
  };
  return out;
}

Var Graph::layer_norm_rows(Var x, Var gamma, Var beta, double eps) {
  check(gamma.rows() == 1 && gamma.cols() == x.cols(), "layer_norm: gamma shape");
  check(beta.rows() == 1 && beta.cols() == x.cols(), "layer_norm: beta shape");
  const Mat& xv = x.val();
  const Eigen::Index n = xv.cols();
  Mat normed(xv.rows(), n);
  Eigen::VectorXd inv_sigma(xv.rows());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    double mu = xv.row(r).mean();
    double var = (xv.row(r).array() - mu).square().sum() / double(n);
    double is = 1.0 / std::sqrt(var + eps);
    inv_sigma[r] = is;
    normed.row(r) = (xv.row(r).array() - mu) * is;
  }
  Mat out_v(xv.rows(), n);
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    out_v.row(r) =
        normed.row(r).cwiseProduct(gamma.val().row(0)) + beta.val().row(0);
  }
  bool any = rg(x) || rg(gamma) || rg(beta);
  Var out = make(std::move(out_v), any);
  if (!any) return out;
  // Keep `normed` on a helper constant node so backward can reuse it.
  Var normed_node = make(std::move(normed), false);
  int xi = x.idx_, gi = gamma.idx_, bi = beta.idx_, oi = out.idx_,
      ni = normed_node.idx_;
  bool gx = rg(x), gg = rg(gamma), gb = rg(beta);
  auto is_vec = std::make_shared<Eigen::VectorXd>(std::move(inv_sigma));
  nodes_[oi].back = [this, xi, gi, bi, oi, ni, gx, gg, gb, is_vec] {
    const Mat& go = grad_of(oi);
    const Mat& nv = val_of(ni);
    if (gb) grad_of(bi) += go.colwise().sum();
    if (gg) grad_of(gi) += (go.array() * nv.array()).colwise().sum().matrix();
    if (gx) {
      const Eigen::Index n = nv.cols();
      const auto& gamma_row = val_of(gi).row(0);
      Mat& gx_mat = grad_of(xi);
      for (Eigen::Index r = 0; r < nv.rows(); ++r) {
        Eigen::RowVectorXd dy = go.row(r).cwiseProduct(gamma_row);
        double m1 = dy.mean();
        double m2 = dy.cwiseProduct(nv.row(r)).mean();
        gx_mat.row(r) +=
            (*is_vec)[r] *
            (dy.array() - m1 - nv.row(r).array() * m2).matrix();
      }
    }
  };
  return out;
}

Var Graph::gelu(Var a) {
  const Mat& x = a.val();
  Mat y = x.unaryExpr([](double v) {
    return 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0)));
  });
  Var out = make(std::move(y), rg(a));
  if (!nodes_[out.idx_].requires_grad) return out;
  int ai = a.idx_, oi = out.idx_;
  nodes_[oi].back = [this, ai, oi] {
    const Mat& x = val_of(ai);
    Mat d = x.unaryExpr([](double v) {
      const double inv_sqrt2pi = 0.3989422804014327;
      return 0.5 * (1.0 + std::erf(v / std::sqrt(2.0))) +
             v * std::exp(-0.5 * v * v) * inv_sqrt2pi;
    });
    grad_of(ai) += grad_of(oi).cwiseProduct(d);
  };
  return out;
}

Var Graph::tanh_(Var a) {
  Var out = make(a.val().array().tanh().matrix(), rg(a));
  if (!nodes_[out.idx_].requires_grad) return out;
  int ai = a.idx_, oi = out.idx_;
  nodes_[oi].back = [this, ai, oi] {
    const Mat& y = val_of(oi);
    grad_of(ai) += (grad_of(oi).array() * (1.0 - y.array().square())).matrix();
  };
  return out;
}

Var Graph::log_(Var a) {
  if ((a.val().array() <= 0.0).any())
    throw std::domain_error("graph: log of non-positive value");
  Var out = make(a.val().array().log().matrix(), rg(a));
  if (!nodes_[out.idx_].requires_grad) return out;
  int ai = a.idx_, oi = out.idx_;
  nodes_[oi].back = [this, ai, oi] {
    grad_of(ai) += (grad_of(oi).array() / val_of(ai).array()).matrix();
  };
  return out;
}

Var Graph::exp_(Var a) {
  Var out = make(a.val().array().exp().matrix(), rg(a));
  if (!nodes_[out.idx_].requires_grad) return out;
  int ai = a.idx_, oi = out.idx_;
  nodes_[oi].back = [this, ai, oi] {
    grad_of(ai) += grad_of(oi).cwiseProduct(val_of(oi));
  };
  return out;
}

Var Graph::sum_all(Var a) {
  Mat v(1, 1);
  v(0, 0) = a.val().sum();
  Var out = make(std::move(v), rg(a));
  if (!nodes_[out.idx_].requires_grad) return out;
  int ai = a.idx_, oi = out.idx_;
  nodes_[oi].back = [this, ai, oi] {
    grad_of(ai).array() += grad_of(oi)(0, 0);
  };
  return out;
}

Var Graph::mean_all(Var a) {
  Mat v(1, 1);
  v(0, 0) = a.val().mean();
  Var out = make(std::move(v), rg(a));
  if (!nodes_[out.idx_].requires_grad) return out;
  int ai = a.idx_, oi = out.idx_;
  double inv = 1.0 / static_cast<double>(a.val().size());
  nodes_[oi].back = [this, ai, oi, inv] {
    grad_of(ai).array() += grad_of(oi)(0, 0) * inv;
  };
  return out;
}

Var Graph::squared_norm(Var a) {
  Mat v(1, 1);
  v(0, 0) = a.val().squaredNorm();
  Var out = make(std::move(v), rg(a));
  if (!nodes_[out.idx_].requires_grad) return out;
  int ai = a.idx_, oi = out.idx_;
  nodes_[oi].back = [this, ai, oi] {
    grad_of(ai) += 2.0 * grad_of(oi)(0, 0) * val_of(ai);
  };
  return out;
}

Var Graph::mean_rows(Var a) {
  Var out = make(a.val().colwise().mean(), rg(a));
  if (!nodes_[out.idx_].requires_grad) return out;
  int ai = a.idx_, oi = out.idx_;
  double inv = 1.0 / static_cast<double>(a.rows());
  nodes_[oi].back = [this, ai, oi, inv] {
    grad_of(ai).rowwise() += (grad_of(oi).row(0) * inv);
  };
  return out;
}

Var Graph::pick(Var a, int r, int c) {
  check(r >= 0 && r < a.rows() && c >= 0 && c < a.cols(), "pick: out of range");
  Mat v(1, 1);
  v(0, 0) = a.val()(r, c);
  Var out = make(std::move(v), rg(a));
  if (!nodes_[out.idx_].requires_grad) return out;
  int ai = a.idx_, oi = out.idx_;
  nodes_[oi].back = [this, ai, oi, r, c] {
    grad_of(ai)(r, c) += grad_of(oi)(0, 0);
  };
  return out;
}

Var Graph::row(Var a, int r) {
  check(r >= 0 && r < a.rows(), "row: out of range");
  Var out = make(a.val().row(r), rg(a));
  if (!nodes_[out.idx_].requires_grad) return out;
  int ai = a.idx_, oi = out.idx_;
  nodes_[oi].back = [this, ai, oi, r] {
    grad_of(ai).row(r) += grad_of(oi).row(0);
  };
  return out;
}

Var Graph::scale_by(Var a, Var s) {
  check(s.rows() == 1 && s.cols() == 1, "scale_by: scale must be 1x1");
  Var out = make(a.val() * s.val()(0, 0), rg(a) || rg(s));
  if (!nodes_[out.idx_].requires_grad) return out;
  int ai = a.idx_, si = s.idx_, oi = out.idx_;
  bool ga = rg(a), gs = rg(s);
  nodes_[oi].back = [this, ai, si, oi, ga, gs] {
    const Mat& go = grad_of(oi);
    if (ga) grad_of(ai) += go * val_of(si)(0, 0);
    if (gs) grad_of(si)(0, 0) += (go.array() * val_of(ai).array()).sum();
  };
  return out;
}

Var Graph::mul_colvec(Var a, Var cv) {
  check(cv.cols() == 1 && cv.rows() == a.rows(),
        "mul_colvec: need a rows x 1 column vector");
  Mat out = (a.val().array().colwise() * cv.val().col(0).array()).matrix();
  Var o = make(std::move(out), rg(a) || rg(cv));
  if (!nodes_[o.idx_].requires_grad) return o;
  int ai = a.idx_, ci = cv.idx_, oi = o.idx_;
  bool ga = rg(a), gc = rg(cv);
  nodes_[oi].back = [this, ai, ci, oi, ga, gc] {
    const Mat& go = grad_of(oi);
    if (ga)
      grad_of(ai) +=
          (go.array().colwise() * val_of(ci).col(0).array()).matrix();
    if (gc)
      for (Eigen::Index r = 0; r < go.rows(); ++r)
        grad_of(ci)(r, 0) += go.row(r).dot(val_of(ai).row(r));
  };
  return o;
}

Var Graph::embedding(Var table, const std::vector<int>& ids) {
  check(!ids.empty(), "embedding: empty id list");
  const Mat& t = table.val();
  Mat v(static_cast<Eigen::Index>(ids.size()), t.cols());
  for (size_t k = 0; k < ids.size(); ++k) {
    check(ids[k] >= 0 && ids[k] < t.rows(), "embedding: id out of range");
    v.row(static_cast<Eigen::Index>(k)) = t.row(ids[k]);
  }
  Var out = make(std::move(v), rg(table));
  if (!nodes_[out.idx_].requires_grad) return out;
  int ti = table.idx_, oi = out.idx_;
  nodes_[oi].back = [this, ti, oi, ids] {
    const Mat& go = grad_of(oi);
    Mat& gt = grad_of(ti);
    for (size_t k = 0; k < ids.size(); ++k)
      gt.row(ids[k]) += go.row(static_cast<Eigen::Index>(k));
  };
  return out;
}

}  // namespace adaptnav::nn

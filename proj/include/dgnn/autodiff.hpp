// Copyright 2026 The dgnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DGNN_AUTODIFF_HPP_
#define DGNN_AUTODIFF_HPP_

// Define-by-run reverse-mode differentiation over dense row-major matrices.
//
// A Tape records every operation in creation order, which is already a
// topological order of the compute graph. backward() walks the tape once
// from the last node to the first, so each node is visited exactly once and
// gradient accumulation happens in the same order for a given tape.
//
// Only the handful of operations the message-passing model needs are
// provided. Tensors are 2-D; vectors are 1×n rows and scalars are 1×1.

#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace dgnn::ad {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Index = Eigen::Index;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Activation { kNone, kRelu, kSigmoid, kTanh };

template <typename Scalar>
class Tape;

/// Handle to a node on a tape. Cheap to copy; only valid while its tape lives.
template <typename Scalar>
class Var {
 public:
  Var() = default;
  Var(Tape<Scalar>* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Matrix<Scalar>& value() const { return tape_->value(*this); }
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  Tape<Scalar>* tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  Tape<Scalar>* tape_ = nullptr;
  std::size_t id_ = 0;
};

template <typename Scalar>
class Tape {
 public:
  using Mat = Matrix<Scalar>;
  // Receives the node's upstream gradient and pushes contributions into its
  // parents through accumulate().
  using Pullback = std::function<void(Tape&, const Mat&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// A leaf that never receives a gradient.
  Var<Scalar> constant(Mat value) { return push(std::move(value), false, {}); }

  /// A leaf whose gradient is populated by backward().
  Var<Scalar> variable(Mat value) { return push(std::move(value), true, {}); }

  /// Records an interior node. The pullback only runs if some parent wants
  /// a gradient.
  Var<Scalar> record(Mat value, std::initializer_list<Var<Scalar>> parents, Pullback pullback) {
    bool needs = false;
    for (const auto& p : parents) {
      check_owner(p);
      needs = needs || nodes_[p.id()].needs_grad;
    }
    return push(std::move(value), needs, needs ? std::move(pullback) : Pullback{});
  }

  Var<Scalar> record(Mat value, std::span<const Var<Scalar>> parents, Pullback pullback) {
    bool needs = false;
    for (const auto& p : parents) {
      check_owner(p);
      needs = needs || nodes_[p.id()].needs_grad;
    }
    return push(std::move(value), needs, needs ? std::move(pullback) : Pullback{});
  }

  const Mat& value(const Var<Scalar>& v) const { return nodes_.at(v.id()).value; }

  bool needs_grad(const Var<Scalar>& v) const { return nodes_.at(v.id()).needs_grad; }

  /// Adds `contribution` into the gradient slot of `v`. No-op for constants.
  template <typename Derived>
  void accumulate(const Var<Scalar>& v, const Eigen::MatrixBase<Derived>& contribution) {
    Node& node = nodes_[v.id()];
    if (!node.needs_grad) return;
    if (node.grad.size() == 0) {
      node.grad = contribution;
    } else {
      node.grad += contribution;
    }
  }

  void backward(const Var<Scalar>& loss) {
    check_owner(loss);
    if (used_) throw std::logic_error("tape already differentiated; build a new tape");
    const Mat& out = value(loss);
    if (out.rows() != 1 || out.cols() != 1) {
      throw std::invalid_argument("backward() needs a 1x1 loss, got " + std::to_string(out.rows()) +
                                  "x" + std::to_string(out.cols()));
    }
    used_ = true;
    if (!nodes_[loss.id()].needs_grad) return;
    nodes_[loss.id()].grad = Mat::Ones(1, 1);
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
      Node& node = nodes_[i];
      if (!node.pullback || node.grad.size() == 0) continue;
      node.pullback(*this, node.grad);
    }
  }

  /// Gradient of the last backward() loss with respect to `v`. Zero-filled
  /// when nothing flowed into `v`.
  Mat grad(const Var<Scalar>& v) const {
    const Node& node = nodes_.at(v.id());
    if (node.grad.size() == 0) return Mat::Zero(node.value.rows(), node.value.cols());
    return node.grad;
  }

  std::size_t size() const { return nodes_.size(); }
  bool used() const { return used_; }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool needs_grad = false;
    Pullback pullback;
  };

  Var<Scalar> push(Mat value, bool needs_grad, Pullback pullback) {
    nodes_.push_back(Node{std::move(value), Mat{}, needs_grad, std::move(pullback)});
    return Var<Scalar>(this, nodes_.size() - 1);
  }

  void check_owner(const Var<Scalar>& v) const {
    if (v.tape() != this || v.id() >= nodes_.size()) {
      throw std::invalid_argument("variable does not belong to this tape");
    }
  }

  std::deque<Node> nodes_;  // deque: value() references survive later pushes
  bool used_ = false;
};

namespace detail {

inline void require(bool ok, const char* op, const std::string& what) {
  if (!ok) throw DimensionError(std::string(op) + ": " + what);
}

inline std::string shape(Index r, Index c) { return std::to_string(r) + "x" + std::to_string(c); }

template <typename Scalar>
void require_same_shape(const Var<Scalar>& a, const Var<Scalar>& b, const char* op) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), op,
          "shape mismatch " + shape(a.rows(), a.cols()) + " vs " + shape(b.rows(), b.cols()));
}

}  // namespace detail

template <typename Scalar>
Var<Scalar> matmul(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require(a.cols() == b.rows(), "matmul",
                  "inner dimensions differ: " + detail::shape(a.rows(), a.cols()) + " * " +
                      detail::shape(b.rows(), b.cols()));
  Matrix<Scalar> out = a.value() * b.value();
  return a.tape()->record(std::move(out), {a, b}, [a, b](Tape<Scalar>& t, const Matrix<Scalar>& g) {
    if (t.needs_grad(a)) t.accumulate(a, g * b.value().transpose());
    if (t.needs_grad(b)) t.accumulate(b, a.value().transpose() * g);
  });
}

template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require_same_shape(a, b, "add");
  Matrix<Scalar> out = a.value() + b.value();
  return a.tape()->record(std::move(out), {a, b}, [a, b](Tape<Scalar>& t, const Matrix<Scalar>& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

template <typename Scalar>
Var<Scalar> sub(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require_same_shape(a, b, "sub");
  Matrix<Scalar> out = a.value() - b.value();
  return a.tape()->record(std::move(out), {a, b}, [a, b](Tape<Scalar>& t, const Matrix<Scalar>& g) {
    t.accumulate(a, g);
    t.accumulate(b, -g);
  });
}

/// Elementwise (Hadamard) product.
template <typename Scalar>
Var<Scalar> mul(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require_same_shape(a, b, "mul");
  Matrix<Scalar> out = a.value().cwiseProduct(b.value());
  return a.tape()->record(std::move(out), {a, b}, [a, b](Tape<Scalar>& t, const Matrix<Scalar>& g) {
    if (t.needs_grad(a)) t.accumulate(a, g.cwiseProduct(b.value()));
    if (t.needs_grad(b)) t.accumulate(b, g.cwiseProduct(a.value()));
  });
}

/// s·x + c, elementwise.
template <typename Scalar>
Var<Scalar> affine(const Var<Scalar>& x, Scalar s, Scalar c) {
  Matrix<Scalar> out = (s * x.value().array() + c).matrix();
  return x.tape()->record(std::move(out), {x},
                          [x, s](Tape<Scalar>& t, const Matrix<Scalar>& g) { t.accumulate(x, s * g); });
}

/// x + row, with the 1×c row broadcast over every row of x.
template <typename Scalar>
Var<Scalar> add_row(const Var<Scalar>& x, const Var<Scalar>& row) {
  detail::require(row.rows() == 1 && row.cols() == x.cols(), "add_row",
                  "bias " + detail::shape(row.rows(), row.cols()) + " does not broadcast over " +
                      detail::shape(x.rows(), x.cols()));
  Matrix<Scalar> out = x.value().rowwise() + row.value().row(0);
  return x.tape()->record(std::move(out), {x, row}, [x, row](Tape<Scalar>& t, const Matrix<Scalar>& g) {
    t.accumulate(x, g);
    if (t.needs_grad(row)) t.accumulate(row, g.colwise().sum());
  });
}

template <typename Scalar>
Var<Scalar> sigmoid(const Var<Scalar>& x) {
  Matrix<Scalar> out = (Scalar(1) / (Scalar(1) + (-x.value().array()).exp())).matrix();
  Tape<Scalar>* tape = x.tape();
  const std::size_t self = tape->size();
  return tape->record(std::move(out), {x}, [x, self](Tape<Scalar>& t, const Matrix<Scalar>& g) {
    const auto& y = t.value(Var<Scalar>(&t, self)).array();
    t.accumulate(x, (g.array() * y * (Scalar(1) - y)).matrix());
  });
}

template <typename Scalar>
Var<Scalar> tanh(const Var<Scalar>& x) {
  Matrix<Scalar> out = x.value().array().tanh().matrix();
  Tape<Scalar>* tape = x.tape();
  const std::size_t self = tape->size();
  return tape->record(std::move(out), {x}, [x, self](Tape<Scalar>& t, const Matrix<Scalar>& g) {
    const auto& y = t.value(Var<Scalar>(&t, self)).array();
    t.accumulate(x, (g.array() * (Scalar(1) - y.square())).matrix());
  });
}

template <typename Scalar>
Var<Scalar> relu(const Var<Scalar>& x) {
  Matrix<Scalar> out = x.value().cwiseMax(Scalar(0));
  return x.tape()->record(std::move(out), {x}, [x](Tape<Scalar>& t, const Matrix<Scalar>& g) {
    t.accumulate(x, (x.value().array() > Scalar(0)).select(g, Scalar(0)).matrix());
  });
}

template <typename Scalar>
Var<Scalar> activate(const Var<Scalar>& x, Activation act) {
  switch (act) {
    case Activation::kRelu:
      return relu(x);
    case Activation::kSigmoid:
      return sigmoid(x);
    case Activation::kTanh:
      return tanh(x);
    case Activation::kNone:
      break;
  }
  return x;
}

/// act(x·W + b) with b a 1×out row.
template <typename Scalar>
Var<Scalar> dense(const Var<Scalar>& x, const Var<Scalar>& w, const Var<Scalar>& b, Activation act) {
  return activate(add_row(matmul(x, w), b), act);
}

/// Sum of all entries as a 1×1 node.
template <typename Scalar>
Var<Scalar> sum(const Var<Scalar>& x) {
  Matrix<Scalar> out(1, 1);
  out(0, 0) = x.value().sum();
  return x.tape()->record(std::move(out), {x}, [x](Tape<Scalar>& t, const Matrix<Scalar>& g) {
    t.accumulate(x, Matrix<Scalar>::Constant(x.rows(), x.cols(), g(0, 0)));
  });
}

/// Σ (x − target)², with `target` held constant.
template <typename Scalar>
Var<Scalar> squared_error(const Var<Scalar>& x, const Matrix<Scalar>& target) {
  detail::require(x.rows() == target.rows() && x.cols() == target.cols(), "squared_error",
                  "target shape " + detail::shape(target.rows(), target.cols()) + " vs prediction " +
                      detail::shape(x.rows(), x.cols()));
  Matrix<Scalar> diff = x.value() - target;
  Matrix<Scalar> out(1, 1);
  out(0, 0) = diff.squaredNorm();
  return x.tape()->record(std::move(out), {x}, [x, diff = std::move(diff)](Tape<Scalar>& t,
                                                                           const Matrix<Scalar>& g) {
    t.accumulate(x, (Scalar(2) * g(0, 0)) * diff);
  });
}

/// Rows of x picked by `index` (rows may repeat).
template <typename Scalar>
Var<Scalar> gather_rows(const Var<Scalar>& x, std::span<const Index> index) {
  const Index n = x.rows();
  Matrix<Scalar> out(static_cast<Index>(index.size()), x.cols());
  for (std::size_t k = 0; k < index.size(); ++k) {
    detail::require(index[k] >= 0 && index[k] < n, "gather_rows",
                    "row " + std::to_string(index[k]) + " out of range for " + std::to_string(n) + " rows");
    out.row(static_cast<Index>(k)) = x.value().row(index[k]);
  }
  std::vector<Index> idx(index.begin(), index.end());
  return x.tape()->record(std::move(out), {x}, [x, idx = std::move(idx)](Tape<Scalar>& t,
                                                                         const Matrix<Scalar>& g) {
    Matrix<Scalar> gx = Matrix<Scalar>::Zero(x.rows(), x.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) gx.row(idx[k]) += g.row(static_cast<Index>(k));
    t.accumulate(x, gx);
  });
}

/// Row i of the result is the sum of the rows of `values` whose segment id
/// is i. Empty segments give zero rows.
template <typename Scalar>
Var<Scalar> segment_sum(const Var<Scalar>& values, std::span<const Index> segments, Index num_segments) {
  detail::require(static_cast<Index>(segments.size()) == values.rows(), "segment_sum",
                  std::to_string(segments.size()) + " segment ids for " + std::to_string(values.rows()) +
                      " rows");
  detail::require(num_segments >= 0, "segment_sum", "negative segment count");
  Matrix<Scalar> out = Matrix<Scalar>::Zero(num_segments, values.cols());
  for (std::size_t k = 0; k < segments.size(); ++k) {
    detail::require(segments[k] >= 0 && segments[k] < num_segments, "segment_sum",
                    "segment id " + std::to_string(segments[k]) + " out of range for " +
                        std::to_string(num_segments) + " segments");
    out.row(segments[k]) += values.value().row(static_cast<Index>(k));
  }
  std::vector<Index> seg(segments.begin(), segments.end());
  return values.tape()->record(std::move(out), {values},
                               [values, seg = std::move(seg)](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                                 Matrix<Scalar> gv(values.rows(), values.cols());
                                 for (std::size_t k = 0; k < seg.size(); ++k) {
                                   gv.row(static_cast<Index>(k)) = g.row(seg[k]);
                                 }
                                 t.accumulate(values, gv);
                               });
}

/// Per-row matrix-vector product. Row e of `flat` holds a d×d matrix in
/// row-major order; the result row e is that matrix times row e of `x`.
template <typename Scalar>
Var<Scalar> rowwise_matvec(const Var<Scalar>& flat, const Var<Scalar>& x) {
  const Index d = x.cols();
  detail::require(flat.rows() == x.rows() && flat.cols() == d * d, "rowwise_matvec",
                  "operator rows " + detail::shape(flat.rows(), flat.cols()) + " incompatible with " +
                      detail::shape(x.rows(), x.cols()));
  const Index e = x.rows();
  Matrix<Scalar> out(e, d);
  for (Index k = 0; k < e; ++k) {
    Eigen::Map<const Matrix<Scalar>> a(flat.value().row(k).data(), d, d);
    out.row(k).noalias() = (a * x.value().row(k).transpose()).transpose();
  }
  return flat.tape()->record(std::move(out), {flat, x}, [flat, x, d, e](Tape<Scalar>& t,
                                                                        const Matrix<Scalar>& g) {
    if (t.needs_grad(flat)) {
      Matrix<Scalar> ga(e, d * d);
      for (Index k = 0; k < e; ++k) {
        Eigen::Map<Matrix<Scalar>> gk(ga.row(k).data(), d, d);
        gk.noalias() = g.row(k).transpose() * x.value().row(k);
      }
      t.accumulate(flat, ga);
    }
    if (t.needs_grad(x)) {
      Matrix<Scalar> gx(e, d);
      for (Index k = 0; k < e; ++k) {
        Eigen::Map<const Matrix<Scalar>> a(flat.value().row(k).data(), d, d);
        gx.row(k).noalias() = g.row(k) * a;
      }
      t.accumulate(x, gx);
    }
  });
}

/// Column-wise concatenation [a | b | ...]; all parts share a row count.
template <typename Scalar>
Var<Scalar> concat_cols(std::span<const Var<Scalar>> parts) {
  detail::require(!parts.empty(), "concat_cols", "nothing to concatenate");
  const Index rows = parts.front().rows();
  Index cols = 0;
  for (const auto& p : parts) {
    detail::require(p.rows() == rows, "concat_cols", "row counts differ");
    cols += p.cols();
  }
  Matrix<Scalar> out(rows, cols);
  Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  std::vector<Var<Scalar>> keep(parts.begin(), parts.end());
  return parts.front().tape()->record(std::move(out), parts,
                                      [keep = std::move(keep)](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                                        Index at = 0;
                                        for (const auto& p : keep) {
                                          if (t.needs_grad(p)) t.accumulate(p, g.middleCols(at, p.cols()));
                                          at += p.cols();
                                        }
                                      });
}

template <typename Scalar>
Var<Scalar> concat_cols(std::initializer_list<Var<Scalar>> parts) {
  return concat_cols(std::span<const Var<Scalar>>(parts.begin(), parts.size()));
}

/// Reinterprets the row-major data with a new shape.
template <typename Scalar>
Var<Scalar> reshape(const Var<Scalar>& x, Index rows, Index cols) {
  detail::require(rows * cols == x.rows() * x.cols(), "reshape",
                  detail::shape(x.rows(), x.cols()) + " cannot become " + detail::shape(rows, cols));
  Matrix<Scalar> out = Eigen::Map<const Matrix<Scalar>>(x.value().data(), rows, cols);
  return x.tape()->record(std::move(out), {x}, [x](Tape<Scalar>& t, const Matrix<Scalar>& g) {
    t.accumulate(x, Eigen::Map<const Matrix<Scalar>>(g.data(), x.rows(), x.cols()));
  });
}

/// Weights of one GRU layer in row-vector convention: inputs are n×d rows,
/// W act on the message, U on the previous state.
template <typename Scalar>
struct GruParams {
  Var<Scalar> w_z, u_z, b_z;
  Var<Scalar> w_r, u_r, b_r;
  Var<Scalar> w_h, u_h, b_h;
};

///   z  = σ(m·W_z + h·U_z + b_z)
///   r  = σ(m·W_r + h·U_r + b_r)
///   ĥ  = tanh(m·W_h + (r⊙h)·U_h + b_h)
///   h' = (1 − z)⊙h + z⊙ĥ
template <typename Scalar>
Var<Scalar> gru_cell(const Var<Scalar>& h, const Var<Scalar>& m, const GruParams<Scalar>& p) {
  detail::require_same_shape(h, m, "gru_cell");
  auto gate = [&](const Var<Scalar>& w, const Var<Scalar>& u, const Var<Scalar>& b, const Var<Scalar>& state) {
    return add_row(add(matmul(m, w), matmul(state, u)), b);
  };
  Var<Scalar> z = sigmoid(gate(p.w_z, p.u_z, p.b_z, h));
  Var<Scalar> r = sigmoid(gate(p.w_r, p.u_r, p.b_r, h));
  Var<Scalar> candidate = tanh(gate(p.w_h, p.u_h, p.b_h, mul(r, h)));
  Var<Scalar> keep = affine(z, Scalar(-1), Scalar(1));
  return add(mul(keep, h), mul(z, candidate));
}

}  // namespace dgnn::ad

#endif  // DGNN_AUTODIFF_HPP_

#pragma once

// Reverse-mode differentiation over rank-2 tensors.
//
// A Tape records every operation applied to Vars created from it. Calling
// backward() on a 1x1 result replays the records in reverse and returns the
// gradient with respect to each tracked leaf. Vars are cheap handles; the
// values live on the tape.

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "coop/numerics/tensor.hpp"

namespace coop {

class Tape;

class TapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id, std::uint64_t generation)
      : tape_(tape), id_(id), generation_(generation) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
  std::uint64_t generation_ = 0;
};

/// Gradients returned by Tape::backward. Untouched tensors read as zeros.
class Gradients {
 public:
  Gradients() = default;
  Gradients(std::vector<Tensor> grads, std::vector<Tensor::Shape> shapes, const Tape* tape,
            std::uint64_t generation)
      : grads_(std::move(grads)), shapes_(std::move(shapes)), tape_(tape), generation_(generation) {}

  Tensor operator[](const Var& v) const;
  bool touched(const Var& v) const { return v.id() < grads_.size() && !grads_[v.id()].empty(); }

 private:
  std::vector<Tensor> grads_;
  std::vector<Tensor::Shape> shapes_;
  const Tape* tape_ = nullptr;
  std::uint64_t generation_ = 0;
};

class Tape {
 public:
  using Backprop = std::function<void(Tape&, const Tensor& upstream)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Tracked leaf: backward() reports its gradient.
  Var variable(Tensor value) { return push(std::move(value), true, nullptr, "variable"); }
  /// Untracked input: never receives gradient.
  Var constant(Tensor value) { return push(std::move(value), false, nullptr, "constant"); }

  const Tensor& value(const Var& v) const {
    check(v);
    return nodes_[v.id_].value;
  }

  bool requires_grad(const Var& v) const {
    check(v);
    return nodes_[v.id_].requires_grad;
  }

  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

  /// Drops all records; outstanding Vars become detached.
  void reset() {
    nodes_.clear();
    grads_.clear();
    consumed_ = false;
    ++generation_;
  }

  Gradients backward(const Var& output) {
    check(output);
    if (consumed_) throw TapeError("tape already consumed by backward(); call reset()");
    const Tensor& out = nodes_[output.id_].value;
    if (out.rank() != 2 || out.rows() != 1 || out.cols() != 1) {
      throw TapeError("backward() needs a 1x1 output, got " + Tensor::shape_string(out.shape()));
    }
    grads_.assign(nodes_.size(), Tensor());
    grads_[output.id_] = Tensor::scalar(1.0);
    for (std::size_t i = output.id_ + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.requires_grad || !n.backprop || grads_[i].empty()) continue;
      n.backprop(*this, grads_[i]);
    }
    consumed_ = true;
    std::vector<Tensor::Shape> shapes;
    shapes.reserve(nodes_.size());
    for (const auto& n : nodes_) shapes.push_back(n.value.shape());
    std::vector<Tensor> grads;
    grads.swap(grads_);
    // Only leaves are reported; intermediate gradients are dropped to save memory.
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (nodes_[i].backprop) grads[i] = Tensor();
    }
    return Gradients(std::move(grads), std::move(shapes), this, generation_);
  }

  // Used by the operation implementations below.
  Var push(Tensor value, bool requires_grad, Backprop backprop, const char* what) {
    if (consumed_) throw TapeError("cannot record on a consumed tape");
    value.check_finite(what);
    if (value.rank() != 2) throw ShapeError(std::string(what) + ": tape values must be rank-2");
    nodes_.push_back(Node{std::move(value), requires_grad, requires_grad ? std::move(backprop) : nullptr});
    return Var(this, nodes_.size() - 1, generation_);
  }

  void accumulate(std::size_t id, const Tensor& g) {
    if (!nodes_[id].requires_grad) return;
    Tensor& acc = grads_[id];
    if (acc.empty()) {
      acc = g;
    } else {
      auto a = acc.values();
      auto b = g.values();
      for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    }
  }

  const Tensor& value_at(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad_at(std::size_t id) const { return nodes_[id].requires_grad; }

  void check(const Var& v) const {
    if (v.tape_ != this) throw TapeError("variable belongs to a different tape");
    if (v.generation_ != generation_ || v.id_ >= nodes_.size()) {
      throw TapeError("detached variable referenced (tape was reset)");
    }
  }

  std::uint64_t generation() const { return generation_; }

 private:
  struct Node {
    Tensor value;
    bool requires_grad;
    Backprop backprop;
  };

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  bool consumed_ = false;
  std::uint64_t generation_ = 1;
};

inline const Tensor& Var::value() const {
  if (!tape_) throw TapeError("uninitialized variable");
  return tape_->value(*this);
}

inline Tensor Gradients::operator[](const Var& v) const {
  if (v.tape() != tape_ || tape_ == nullptr) throw TapeError("gradient requested for a foreign variable");
  if (v.id() >= grads_.size()) throw TapeError("gradient requested for a variable recorded after backward()");
  if (grads_[v.id()].empty()) return Tensor(shapes_[v.id()], 0.0);
  return grads_[v.id()];
}

namespace ops {
namespace detail {

inline Tape& same_tape(const Var& a, const Var& b) {
  if (!a.valid() || a.tape() != b.tape()) throw TapeError("operands recorded on different tapes");
  a.tape()->check(a);
  a.tape()->check(b);
  return *a.tape();
}

inline Tape& tape_of(const Var& a) {
  if (!a.valid()) throw TapeError("uninitialized variable");
  a.tape()->check(a);
  return *a.tape();
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch " + Tensor::shape_string(a.shape()) +
                     " vs " + Tensor::shape_string(b.shape()));
  }
}

template <class F>
Tensor map(const Tensor& a, F f) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

}  // namespace detail

inline Var add(const Var& a, const Var& b) {
  Tape& t = detail::same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  detail::require_same_shape(av, bv, "add");
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return t.push(std::move(out), t.requires_grad(a) || t.requires_grad(b),
                [ia, ib](Tape& tp, const Tensor& g) {
                  tp.accumulate(ia, g);
                  tp.accumulate(ib, g);
                },
                "add");
}

inline Var sub(const Var& a, const Var& b) {
  Tape& t = detail::same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  detail::require_same_shape(av, bv, "sub");
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return t.push(std::move(out), t.requires_grad(a) || t.requires_grad(b),
                [ia, ib](Tape& tp, const Tensor& g) {
                  tp.accumulate(ia, g);
                  if (tp.requires_grad_at(ib)) tp.accumulate(ib, detail::map(g, [](double v) { return -v; }));
                },
                "sub");
}

/// Elementwise product.
inline Var mul(const Var& a, const Var& b) {
  Tape& t = detail::same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  detail::require_same_shape(av, bv, "mul");
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return t.push(std::move(out), t.requires_grad(a) || t.requires_grad(b),
                [ia, ib](Tape& tp, const Tensor& g) {
                  const Tensor& x = tp.value_at(ia);
                  const Tensor& y = tp.value_at(ib);
                  if (tp.requires_grad_at(ia)) {
                    Tensor ga(g.shape());
                    for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * y[i];
                    tp.accumulate(ia, ga);
                  }
                  if (tp.requires_grad_at(ib)) {
                    Tensor gb(g.shape());
                    for (std::size_t i = 0; i < g.size(); ++i) gb[i] = g[i] * x[i];
                    tp.accumulate(ib, gb);
                  }
                },
                "mul");
}

inline Var scale(const Var& a, double c) {
  Tape& t = detail::tape_of(a);
  Tensor out = detail::map(a.value(), [c](double v) { return c * v; });
  const std::size_t ia = a.id();
  return t.push(std::move(out), t.requires_grad(a),
                [ia, c](Tape& tp, const Tensor& g) {
                  tp.accumulate(ia, detail::map(g, [c](double v) { return c * v; }));
                },
                "scale");
}

/// a + c for a scalar constant c.
inline Var shift(const Var& a, double c) {
  Tape& t = detail::tape_of(a);
  Tensor out = detail::map(a.value(), [c](double v) { return v + c; });
  const std::size_t ia = a.id();
  return t.push(std::move(out), t.requires_grad(a),
                [ia](Tape& tp, const Tensor& g) { tp.accumulate(ia, g); }, "shift");
}

/// Adds a 1 x c row vector to every row of a (bias broadcast).
inline Var add_row(const Var& a, const Var& row) {
  Tape& t = detail::same_tape(a, row);
  const Tensor& av = a.value();
  const Tensor& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols()) throw ShapeError("add_row: bias must be 1 x cols");
  Tensor out(av.shape());
  const std::size_t r = av.rows(), c = av.cols();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out(i, j) = av(i, j) + rv(0, j);
  const std::size_t ia = a.id(), ib = row.id();
  return t.push(std::move(out), t.requires_grad(a) || t.requires_grad(row),
                [ia, ib, r, c](Tape& tp, const Tensor& g) {
                  tp.accumulate(ia, g);
                  if (tp.requires_grad_at(ib)) {
                    Tensor gb = Tensor::matrix(1, c);
                    for (std::size_t i = 0; i < r; ++i)
                      for (std::size_t j = 0; j < c; ++j) gb(0, j) += g(i, j);
                    tp.accumulate(ib, gb);
                  }
                },
                "add_row");
}

/// Multiplies row i of a by col(i, 0) (per-row weights).
inline Var mul_col(const Var& a, const Var& col) {
  Tape& t = detail::same_tape(a, col);
  const Tensor& av = a.value();
  const Tensor& cv = col.value();
  if (cv.cols() != 1 || cv.rows() != av.rows()) throw ShapeError("mul_col: weights must be rows x 1");
  const std::size_t r = av.rows(), c = av.cols();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out(i, j) = av(i, j) * cv(i, 0);
  const std::size_t ia = a.id(), ic = col.id();
  return t.push(std::move(out), t.requires_grad(a) || t.requires_grad(col),
                [ia, ic, r, c](Tape& tp, const Tensor& g) {
                  const Tensor& x = tp.value_at(ia);
                  const Tensor& w = tp.value_at(ic);
                  if (tp.requires_grad_at(ia)) {
                    Tensor ga(g.shape());
                    for (std::size_t i = 0; i < r; ++i)
                      for (std::size_t j = 0; j < c; ++j) ga(i, j) = g(i, j) * w(i, 0);
                    tp.accumulate(ia, ga);
                  }
                  if (tp.requires_grad_at(ic)) {
                    Tensor gw = Tensor::matrix(r, 1);
                    for (std::size_t i = 0; i < r; ++i)
                      for (std::size_t j = 0; j < c; ++j) gw(i, 0) += g(i, j) * x(i, j);
                    tp.accumulate(ic, gw);
                  }
                },
                "mul_col");
}

inline Var matmul(const Var& a, const Var& b) {
  Tape& t = detail::same_tape(a, b);
  Tensor out = coop::matmul(a.value(), b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return t.push(std::move(out), t.requires_grad(a) || t.requires_grad(b),
                [ia, ib](Tape& tp, const Tensor& g) {
                  const Tensor& x = tp.value_at(ia);
                  const Tensor& y = tp.value_at(ib);
                  if (tp.requires_grad_at(ia)) {
                    // dA = G * B^T
                    const std::size_t n = g.rows(), p = g.cols(), m = y.rows();
                    Tensor ga = Tensor::matrix(n, m);
                    for (std::size_t i = 0; i < n; ++i)
                      for (std::size_t k = 0; k < m; ++k) {
                        double s = 0.0;
                        const double* gr = &g(i, 0);
                        const double* yr = &y(k, 0);
                        for (std::size_t j = 0; j < p; ++j) s += gr[j] * yr[j];
                        ga(i, k) = s;
                      }
                    tp.accumulate(ia, ga);
                  }
                  if (tp.requires_grad_at(ib)) {
                    // dB = A^T * G
                    const std::size_t n = x.rows(), m = x.cols(), p = g.cols();
                    Tensor gb = Tensor::matrix(m, p);
                    for (std::size_t i = 0; i < n; ++i)
                      for (std::size_t k = 0; k < m; ++k) {
                        const double xik = x(i, k);
                        if (xik == 0.0) continue;
                        double* o = &gb(k, 0);
                        const double* gr = &g(i, 0);
                        for (std::size_t j = 0; j < p; ++j) o[j] += xik * gr[j];
                      }
                    tp.accumulate(ib, gb);
                  }
                },
                "matmul");
}

inline Var sigmoid(const Var& a) {
  Tape& t = detail::tape_of(a);
  Tensor out = detail::map(a.value(), [](double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
  const std::size_t ia = a.id();
  const std::size_t io = t.size();
  return t.push(std::move(out), t.requires_grad(a),
                [ia, io](Tape& tp, const Tensor& g) {
                  const Tensor& s = tp.value_at(io);
                  Tensor ga(g.shape());
                  for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * s[i] * (1.0 - s[i]);
                  tp.accumulate(ia, ga);
                },
                "sigmoid");
}

inline Var tanh(const Var& a) {
  Tape& t = detail::tape_of(a);
  Tensor out = detail::map(a.value(), [](double v) { return std::tanh(v); });
  const std::size_t ia = a.id();
  const std::size_t io = t.size();
  return t.push(std::move(out), t.requires_grad(a),
                [ia, io](Tape& tp, const Tensor& g) {
                  const Tensor& s = tp.value_at(io);
                  Tensor ga(g.shape());
                  for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * (1.0 - s[i] * s[i]);
                  tp.accumulate(ia, ga);
                },
                "tanh");
}

inline Var exp(const Var& a) {
  Tape& t = detail::tape_of(a);
  Tensor out = detail::map(a.value(), [](double v) { return std::exp(v); });
  const std::size_t ia = a.id();
  const std::size_t io = t.size();
  return t.push(std::move(out), t.requires_grad(a),
                [ia, io](Tape& tp, const Tensor& g) {
                  const Tensor& s = tp.value_at(io);
                  Tensor ga(g.shape());
                  for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * s[i];
                  tp.accumulate(ia, ga);
                },
                "exp");
}

inline Var square(const Var& a) {
  Tape& t = detail::tape_of(a);
  Tensor out = detail::map(a.value(), [](double v) { return v * v; });
  const std::size_t ia = a.id();
  return t.push(std::move(out), t.requires_grad(a),
                [ia](Tape& tp, const Tensor& g) {
                  const Tensor& x = tp.value_at(ia);
                  Tensor ga(g.shape());
                  for (std::size_t i = 0; i < g.size(); ++i) ga[i] = 2.0 * g[i] * x[i];
                  tp.accumulate(ia, ga);
                },
                "square");
}

/// Sum of all entries, as a 1x1 tensor.
inline Var sum(const Var& a) {
  Tape& t = detail::tape_of(a);
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  const std::size_t ia = a.id();
  return t.push(Tensor::scalar(s), t.requires_grad(a),
                [ia](Tape& tp, const Tensor& g) {
                  tp.accumulate(ia, Tensor(tp.value_at(ia).shape(), g[0]));
                },
                "sum");
}

/// Horizontal concatenation of equally tall blocks.
inline Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  Tape& t = detail::tape_of(parts.front());
  const std::size_t r = parts.front().rows();
  std::size_t total = 0;
  bool rg = false;
  std::vector<std::size_t> ids, widths;
  for (const auto& p : parts) {
    detail::same_tape(parts.front(), p);
    if (p.rows() != r) throw ShapeError("concat_cols: row count mismatch");
    total += p.cols();
    rg = rg || t.requires_grad(p);
    ids.push_back(p.id());
    widths.push_back(p.cols());
  }
  Tensor out = Tensor::matrix(r, total);
  std::size_t off = 0;
  for (const auto& p : parts) {
    const Tensor& v = p.value();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < v.cols(); ++j) out(i, off + j) = v(i, j);
    off += v.cols();
  }
  return t.push(std::move(out), rg,
                [ids, widths, r](Tape& tp, const Tensor& g) {
                  std::size_t o = 0;
                  for (std::size_t k = 0; k < ids.size(); ++k) {
                    if (tp.requires_grad_at(ids[k])) {
                      Tensor gk = Tensor::matrix(r, widths[k]);
                      for (std::size_t i = 0; i < r; ++i)
                        for (std::size_t j = 0; j < widths[k]; ++j) gk(i, j) = g(i, o + j);
                      tp.accumulate(ids[k], gk);
                    }
                    o += widths[k];
                  }
                },
                "concat_cols");
}

inline Var slice_cols(const Var& a, std::size_t start, std::size_t count) {
  Tape& t = detail::tape_of(a);
  const Tensor& av = a.value();
  if (start + count > av.cols()) throw ShapeError("slice_cols: range out of bounds");
  const std::size_t r = av.rows(), c = av.cols();
  Tensor out = Tensor::matrix(r, count);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < count; ++j) out(i, j) = av(i, start + j);
  const std::size_t ia = a.id();
  return t.push(std::move(out), t.requires_grad(a),
                [ia, r, c, start, count](Tape& tp, const Tensor& g) {
                  Tensor ga = Tensor::matrix(r, c);
                  for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < count; ++j) ga(i, start + j) = g(i, j);
                  tp.accumulate(ia, ga);
                },
                "slice_cols");
}

/// Per-row autoregressive combination.
///
/// `heads` is B x (K*N*N) holding, per row, K coefficient matrices in
/// row-major order (entry [k][r][c] at k*N*N + r*N + c); `lags` is B x (K*N)
/// holding the lag vectors x_i, x_{i-1}, ... Returns B x N with
/// out[b][r] = sum_k sum_c heads[b][k][r][c] * lags[b][k*N + c].
inline Var ar_combine(const Var& heads, const Var& lags, std::size_t order, std::size_t channels) {
  Tape& t = detail::same_tape(heads, lags);
  const Tensor& hv = heads.value();
  const Tensor& lv = lags.value();
  const std::size_t b = hv.rows(), n = channels, k = order;
  if (hv.cols() != k * n * n || lv.cols() != k * n || lv.rows() != b) {
    throw ShapeError("ar_combine: heads must be B x K*N*N and lags B x K*N");
  }
  Tensor out = Tensor::matrix(b, n);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t q = 0; q < k; ++q)
      for (std::size_t r = 0; r < n; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < n; ++c) s += hv(i, q * n * n + r * n + c) * lv(i, q * n + c);
        out(i, r) += s;
      }
  const std::size_t ih = heads.id(), il = lags.id();
  return t.push(std::move(out), t.requires_grad(heads) || t.requires_grad(lags),
                [ih, il, b, n, k](Tape& tp, const Tensor& g) {
                  const Tensor& h = tp.value_at(ih);
                  const Tensor& l = tp.value_at(il);
                  if (tp.requires_grad_at(ih)) {
                    Tensor gh = Tensor::matrix(b, k * n * n);
                    for (std::size_t i = 0; i < b; ++i)
                      for (std::size_t q = 0; q < k; ++q)
                        for (std::size_t r = 0; r < n; ++r)
                          for (std::size_t c = 0; c < n; ++c)
                            gh(i, q * n * n + r * n + c) = g(i, r) * l(i, q * n + c);
                    tp.accumulate(ih, gh);
                  }
                  if (tp.requires_grad_at(il)) {
                    Tensor gl = Tensor::matrix(b, k * n);
                    for (std::size_t i = 0; i < b; ++i)
                      for (std::size_t q = 0; q < k; ++q)
                        for (std::size_t c = 0; c < n; ++c) {
                          double s = 0.0;
                          for (std::size_t r = 0; r < n; ++r) s += g(i, r) * h(i, q * n * n + r * n + c);
                          gl(i, q * n + c) = s;
                        }
                    tp.accumulate(il, gl);
                  }
                },
                "ar_combine");
}

}  // namespace ops

inline Var operator+(const Var& a, const Var& b) { return ops::add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return ops::sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return ops::mul(a, b); }
inline Var operator*(double c, const Var& a) { return ops::scale(a, c); }
inline Var operator*(const Var& a, double c) { return ops::scale(a, c); }

}  // namespace coop

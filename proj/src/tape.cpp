#include "nmm/tape.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "nmm/error.hpp"
#include "nmm/priors.hpp"

namespace nmm::ad {
namespace {

Eigen::Index broadcast_dim(Eigen::Index a, Eigen::Index b) {
  if (a == b) return a;
  if (a == 1) return b;
  if (b == 1) return a;
  throw ContractViolation("tape: incompatible shapes for broadcasting (" +
                          std::to_string(a) + " vs " + std::to_string(b) + ")");
}

template <class F>
Matrix broadcast_binary(const Matrix& a, const Matrix& b, F f) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return a.binaryExpr(b, f);
  const Eigen::Index rows = broadcast_dim(a.rows(), b.rows());
  const Eigen::Index cols = broadcast_dim(a.cols(), b.cols());
  Matrix out(rows, cols);
  const bool ar = a.rows() == 1, ac = a.cols() == 1;
  const bool br = b.rows() == 1, bc = b.cols() == 1;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      out(i, j) = f(a(ar ? 0 : i, ac ? 0 : j), b(br ? 0 : i, bc ? 0 : j));
    }
  }
  return out;
}

// Sums a broadcast adjoint back down to a parent's shape.
Matrix reduce_to(const Matrix& g, Eigen::Index rows, Eigen::Index cols) {
  if (g.rows() == rows && g.cols() == cols) return g;
  if (rows == 1 && cols == 1) return Matrix::Constant(1, 1, g.sum());
  if (rows == 1) return g.colwise().sum();
  return g.rowwise().sum();
}

void accumulate(std::vector<Matrix>& adjoints, int id, const Matrix& delta,
                Op op) {
  if (!delta.allFinite()) {
    throw NumericalError(std::string("non-finite adjoint produced by op '") +
                         op_name(op) + "'");
  }
  Matrix& dst = adjoints[static_cast<std::size_t>(id)];
  if (dst.size() == 0) {
    dst = delta;
  } else {
    dst += delta;
  }
}

// g * f'(x) with the convention that a zero adjoint contributes zero even
// where f' is unbounded.
template <class D>
Matrix chain(const Matrix& g, const Matrix& x, const Matrix& v, D deriv) {
  Matrix out(g.rows(), g.cols());
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const double gi = g.data()[i];
    out.data()[i] = gi == 0.0 ? 0.0 : gi * deriv(x.data()[i], v.data()[i]);
  }
  return out;
}

double stable_logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) {
  if (x > 30.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::leaf: return "leaf";
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::mul: return "mul";
    case Op::div: return "div";
    case Op::matmul: return "matmul";
    case Op::spmm: return "spmm";
    case Op::gather: return "gather";
    case Op::tanh: return "tanh";
    case Op::artanh: return "artanh";
    case Op::arccos: return "arccos";
    case Op::arcosh: return "arcosh";
    case Op::exp: return "exp";
    case Op::log: return "log";
    case Op::logistic: return "logistic";
    case Op::softplus: return "softplus";
    case Op::relu: return "relu";
    case Op::abs: return "abs";
    case Op::sqrt: return "sqrt";
    case Op::clamp: return "clamp";
    case Op::sum: return "sum";
    case Op::row_sum: return "row_sum";
    case Op::row_norm: return "row_norm";
    case Op::softmax: return "softmax";
    case Op::log_partition: return "log_partition";
  }
  return "unknown";
}

const Matrix& Var::value() const {
  if (tape_ == nullptr) throw ContractViolation("use of an unbound Var");
  return tape_->value(*this);
}

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw ContractViolation("Var::scalar on a non-1x1 value");
  }
  return v(0, 0);
}

Var Tape::variable(Matrix value) {
  Node n;
  n.requires_grad = true;
  n.value = std::move(value);
  return record(std::move(n));
}

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  return record(std::move(n));
}

Var Tape::variable(double value) {
  return variable(Matrix::Constant(1, 1, value));
}

Var Tape::constant(double value) {
  return constant(Matrix::Constant(1, 1, value));
}

const Matrix& Tape::value(Var v) const {
  if (v.tape_ != this || v.id_ < 0 ||
      static_cast<std::size_t>(v.id_) >= nodes_.size()) {
    throw ContractViolation("Var does not belong to this tape");
  }
  return nodes_[static_cast<std::size_t>(v.id_)].value;
}

Matrix Tape::gradient(Var v) const {
  const Matrix& val = value(v);
  const auto id = static_cast<std::size_t>(v.id_);
  if (id >= adjoints_.size() || adjoints_[id].size() == 0) {
    return Matrix::Zero(val.rows(), val.cols());
  }
  return adjoints_[id];
}

void Tape::set_value(Var leaf, Matrix value) {
  Node& n = nodes_.at(static_cast<std::size_t>(leaf.id_));
  if (n.op != Op::leaf) throw ContractViolation("set_value on a non-leaf");
  if (value.rows() != n.value.rows() || value.cols() != n.value.cols()) {
    throw ContractViolation("set_value: shape change not allowed");
  }
  n.value = std::move(value);
}

Var Tape::record(Node node) {
  if (node.op != Op::leaf) {
    node.requires_grad = nodes_[static_cast<std::size_t>(node.a)].requires_grad;
    if (node.b >= 0) {
      node.requires_grad =
          node.requires_grad ||
          nodes_[static_cast<std::size_t>(node.b)].requires_grad;
    }
    compute(node);
  }
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::forward() {
  for (Node& n : nodes_) {
    if (n.op != Op::leaf) compute(n);
  }
}

void Tape::compute(Node& n) const {
  const Matrix& x = nodes_[static_cast<std::size_t>(n.a)].value;
  const Matrix* y =
      n.b >= 0 ? &nodes_[static_cast<std::size_t>(n.b)].value : nullptr;
  switch (n.op) {
    case Op::leaf:
      return;
    case Op::add:
      n.value = broadcast_binary(x, *y, [](double p, double q) { return p + q; });
      return;
    case Op::sub:
      n.value = broadcast_binary(x, *y, [](double p, double q) { return p - q; });
      return;
    case Op::mul:
      n.value = broadcast_binary(x, *y, [](double p, double q) { return p * q; });
      return;
    case Op::div:
      n.value = broadcast_binary(x, *y, [](double p, double q) { return p / q; });
      return;
    case Op::matmul:
      if (n.transpose_b) {
        if (x.cols() != y->cols()) throw ContractViolation("matmul: shape mismatch");
        n.value = x * y->transpose();
      } else {
        if (x.cols() != y->rows()) throw ContractViolation("matmul: shape mismatch");
        n.value = x * (*y);
      }
      return;
    case Op::spmm:
      if (n.sparse->cols() != x.rows()) throw ContractViolation("spmm: shape mismatch");
      n.value = (*n.sparse) * x;
      return;
    case Op::gather: {
      const auto& idx = *n.index;
      n.value.resize(static_cast<Eigen::Index>(idx.size()), x.cols());
      for (std::size_t r = 0; r < idx.size(); ++r) {
        if (idx[r] < 0 || idx[r] >= x.rows()) {
          throw ContractViolation("gather_rows: index out of range");
        }
        n.value.row(static_cast<Eigen::Index>(r)) = x.row(idx[r]);
      }
      return;
    }
    case Op::tanh:
      n.value = x.array().tanh().matrix();
      return;
    case Op::artanh:
      n.value = x.unaryExpr([](double v) { return std::atanh(v); });
      return;
    case Op::arccos:
      n.value = x.unaryExpr([](double v) { return std::acos(v); });
      return;
    case Op::arcosh:
      n.value = x.unaryExpr([](double v) { return std::acosh(v); });
      return;
    case Op::exp:
      n.value = x.array().exp().matrix();
      return;
    case Op::log:
      n.value = x.array().log().matrix();
      return;
    case Op::logistic:
      n.value = x.unaryExpr(&stable_logistic);
      return;
    case Op::softplus:
      n.value = x.unaryExpr(&stable_softplus);
      return;
    case Op::relu:
      n.value = x.array().max(0.0).matrix();
      return;
    case Op::abs:
      n.value = x.array().abs().matrix();
      return;
    case Op::sqrt:
      n.value = x.array().sqrt().matrix();
      return;
    case Op::clamp:
      n.value = x.array().max(n.lo).min(n.hi).matrix();
      return;
    case Op::sum:
      n.value = Matrix::Constant(1, 1, x.sum());
      return;
    case Op::row_sum:
      n.value = x.rowwise().sum();
      return;
    case Op::row_norm:
      n.value = x.rowwise().norm();
      return;
    case Op::softmax: {
      n.value.resize(x.rows(), x.cols());
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double m = x.row(i).maxCoeff();
        n.value.row(i) = (x.row(i).array() - m).exp().matrix();
        n.value.row(i) /= n.value.row(i).sum();
      }
      return;
    }
    case Op::log_partition:
      if (x.size() != 1) throw ContractViolation("log_partition needs a 1x1 zeta");
      n.value = Matrix::Constant(1, 1, log_normalizer(x(0, 0), n.dim));
      return;
  }
}

void Tape::backward(Var output) {
  const Matrix& out = value(output);
  if (out.rows() != 1 || out.cols() != 1) {
    throw ContractViolation("backward needs a 1x1 output");
  }
  adjoints_.assign(nodes_.size(), Matrix());
  adjoints_[static_cast<std::size_t>(output.id_)] = Matrix::Constant(1, 1, 1.0);
  for (int id = output.id_; id >= 0; --id) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.op == Op::leaf || !n.requires_grad) continue;
    if (adjoints_[static_cast<std::size_t>(id)].size() == 0) continue;
    propagate(id, adjoints_);
  }
}

void Tape::propagate(int id, std::vector<Matrix>& adj) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  const Matrix& g = adj[static_cast<std::size_t>(id)];
  const Node& pa = nodes_[static_cast<std::size_t>(n.a)];
  const Node* pb = n.b >= 0 ? &nodes_[static_cast<std::size_t>(n.b)] : nullptr;
  const Matrix& x = pa.value;
  const Matrix& v = n.value;
  const bool ga = pa.requires_grad;
  const bool gb = pb != nullptr && pb->requires_grad;

  auto unary = [&](auto deriv) {
    if (ga) accumulate(adj, n.a, chain(g, x, v, deriv), n.op);
  };

  switch (n.op) {
    case Op::leaf:
      return;
    case Op::add:
      if (ga) accumulate(adj, n.a, reduce_to(g, x.rows(), x.cols()), n.op);
      if (gb) accumulate(adj, n.b, reduce_to(g, pb->value.rows(), pb->value.cols()), n.op);
      return;
    case Op::sub:
      if (ga) accumulate(adj, n.a, reduce_to(g, x.rows(), x.cols()), n.op);
      if (gb) accumulate(adj, n.b, -reduce_to(g, pb->value.rows(), pb->value.cols()), n.op);
      return;
    case Op::mul: {
      const Matrix& y = pb->value;
      auto times = [](double p, double q) { return p * q; };
      if (ga) accumulate(adj, n.a, reduce_to(broadcast_binary(g, y, times), x.rows(), x.cols()), n.op);
      if (gb) accumulate(adj, n.b, reduce_to(broadcast_binary(g, x, times), y.rows(), y.cols()), n.op);
      return;
    }
    case Op::div: {
      const Matrix& y = pb->value;
      if (ga) {
        accumulate(adj, n.a,
                   reduce_to(broadcast_binary(g, y, [](double p, double q) { return p / q; }),
                             x.rows(), x.cols()),
                   n.op);
      }
      if (gb) {
        const Matrix gv = g.cwiseProduct(v);
        accumulate(adj, n.b,
                   reduce_to(broadcast_binary(gv, y, [](double p, double q) { return -p / q; }),
                             y.rows(), y.cols()),
                   n.op);
      }
      return;
    }
    case Op::matmul: {
      const Matrix& y = pb->value;
      if (n.transpose_b) {
        if (ga) accumulate(adj, n.a, g * y, n.op);
        if (gb) accumulate(adj, n.b, g.transpose() * x, n.op);
      } else {
        if (ga) accumulate(adj, n.a, g * y.transpose(), n.op);
        if (gb) accumulate(adj, n.b, x.transpose() * g, n.op);
      }
      return;
    }
    case Op::spmm:
      if (ga) accumulate(adj, n.a, Matrix(n.sparse->transpose() * g), n.op);
      return;
    case Op::gather: {
      if (!ga) return;
      Matrix delta = Matrix::Zero(x.rows(), x.cols());
      const auto& idx = *n.index;
      for (std::size_t r = 0; r < idx.size(); ++r) {
        delta.row(idx[r]) += g.row(static_cast<Eigen::Index>(r));
      }
      accumulate(adj, n.a, delta, n.op);
      return;
    }
    case Op::tanh:
      unary([](double, double t) { return 1.0 - t * t; });
      return;
    case Op::artanh:
      unary([](double a, double) { return 1.0 / (1.0 - a * a); });
      return;
    case Op::arccos:
      unary([](double a, double) { return -1.0 / std::sqrt(1.0 - a * a); });
      return;
    case Op::arcosh:
      unary([](double a, double) { return 1.0 / std::sqrt(a * a - 1.0); });
      return;
    case Op::exp:
      unary([](double, double e) { return e; });
      return;
    case Op::log:
      unary([](double a, double) { return 1.0 / a; });
      return;
    case Op::logistic:
      unary([](double, double s) { return s * (1.0 - s); });
      return;
    case Op::softplus:
      unary([](double a, double) { return stable_logistic(a); });
      return;
    case Op::relu:
      unary([](double a, double) { return a > 0.0 ? 1.0 : 0.0; });
      return;
    case Op::abs:
      unary([](double a, double) { return a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0); });
      return;
    case Op::sqrt:
      unary([](double, double r) { return r > 0.0 ? 0.5 / r : 0.0; });
      return;
    case Op::clamp: {
      const double lo = n.lo, hi = n.hi;
      unary([lo, hi](double a, double) { return (a >= lo && a <= hi) ? 1.0 : 0.0; });
      return;
    }
    case Op::sum:
      if (ga) accumulate(adj, n.a, Matrix::Constant(x.rows(), x.cols(), g(0, 0)), n.op);
      return;
    case Op::row_sum:
      if (ga) {
        Matrix delta(x.rows(), x.cols());
        for (Eigen::Index i = 0; i < x.rows(); ++i) delta.row(i).setConstant(g(i, 0));
        accumulate(adj, n.a, delta, n.op);
      }
      return;
    case Op::row_norm:
      if (ga) {
        Matrix delta = Matrix::Zero(x.rows(), x.cols());
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
          if (v(i, 0) > 0.0) delta.row(i) = x.row(i) * (g(i, 0) / v(i, 0));
        }
        accumulate(adj, n.a, delta, n.op);
      }
      return;
    case Op::softmax:
      if (ga) {
        Matrix delta(x.rows(), x.cols());
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
          const double dot = g.row(i).dot(v.row(i));
          delta.row(i) = v.row(i).cwiseProduct(
              (g.row(i).array() - dot).matrix());
        }
        accumulate(adj, n.a, delta, n.op);
      }
      return;
    case Op::log_partition:
      if (ga) {
        accumulate(adj, n.a,
                   Matrix::Constant(1, 1, g(0, 0) * log_normalizer_derivative(x(0, 0), n.dim)),
                   n.op);
      }
      return;
  }
}

namespace {

Tape& same_tape(Var a, Var b) {
  if (a.tape() == nullptr || a.tape() != b.tape()) {
    throw ContractViolation("tape: operands recorded on different tapes");
  }
  return *a.tape();
}

Var binary(Op op, Var a, Var b) {
  Tape& t = same_tape(a, b);
  Tape::Node n;
  n.op = op;
  n.a = a.id();
  n.b = b.id();
  return t.record(std::move(n));
}

Var unary(Op op, Var a) {
  if (a.tape() == nullptr) throw ContractViolation("tape: unbound operand");
  Tape::Node n;
  n.op = op;
  n.a = a.id();
  return a.tape()->record(std::move(n));
}

Var scalar_like(Var ref, double value) { return ref.tape()->constant(value); }

}  // namespace

Var operator+(Var a, Var b) { return binary(Op::add, a, b); }
Var operator-(Var a, Var b) { return binary(Op::sub, a, b); }
Var operator*(Var a, Var b) { return binary(Op::mul, a, b); }
Var operator/(Var a, Var b) { return binary(Op::div, a, b); }
Var operator+(double a, Var b) { return scalar_like(b, a) + b; }
Var operator+(Var a, double b) { return a + scalar_like(a, b); }
Var operator-(double a, Var b) { return scalar_like(b, a) - b; }
Var operator-(Var a, double b) { return a - scalar_like(a, b); }
Var operator*(double a, Var b) { return scalar_like(b, a) * b; }
Var operator*(Var a, double b) { return a * scalar_like(a, b); }
Var operator/(Var a, double b) { return a / scalar_like(a, b); }
Var operator/(double a, Var b) { return scalar_like(b, a) / b; }
Var operator-(Var a) { return scalar_like(a, -1.0) * a; }

Var matmul(Var a, Var b, bool transpose_b) {
  Tape& t = same_tape(a, b);
  Tape::Node n;
  n.op = Op::matmul;
  n.a = a.id();
  n.b = b.id();
  n.transpose_b = transpose_b;
  return t.record(std::move(n));
}

Var spmm(std::shared_ptr<const SparseMatrix> s, Var x) {
  Tape::Node n;
  n.op = Op::spmm;
  n.a = x.id();
  n.sparse = std::move(s);
  return x.tape()->record(std::move(n));
}

Var gather_rows(Var x, std::shared_ptr<const std::vector<Eigen::Index>> rows) {
  Tape::Node n;
  n.op = Op::gather;
  n.a = x.id();
  n.index = std::move(rows);
  return x.tape()->record(std::move(n));
}

Var tanh(Var x) { return unary(Op::tanh, x); }
Var artanh(Var x) { return unary(Op::artanh, x); }
Var arccos(Var x) { return unary(Op::arccos, x); }
Var arcosh(Var x) { return unary(Op::arcosh, x); }
Var exp(Var x) { return unary(Op::exp, x); }
Var log(Var x) { return unary(Op::log, x); }
Var logistic(Var x) { return unary(Op::logistic, x); }
Var softplus(Var x) { return unary(Op::softplus, x); }
Var relu(Var x) { return unary(Op::relu, x); }
Var abs(Var x) { return unary(Op::abs, x); }
Var sqrt(Var x) { return unary(Op::sqrt, x); }

Var clamp(Var x, double lo, double hi) {
  Tape::Node n;
  n.op = Op::clamp;
  n.a = x.id();
  n.lo = lo;
  n.hi = hi;
  return x.tape()->record(std::move(n));
}

Var sum(Var x) { return unary(Op::sum, x); }
Var row_sum(Var x) { return unary(Op::row_sum, x); }
Var row_norm(Var x) { return unary(Op::row_norm, x); }
Var softmax_rows(Var x) { return unary(Op::softmax, x); }

Var mean(Var x) {
  const auto count = static_cast<double>(x.value().size());
  if (count == 0) throw ContractViolation("mean of an empty matrix");
  return sum(x) / count;
}

Var log_partition(Var zeta, int d) {
  Tape::Node n;
  n.op = Op::log_partition;
  n.a = zeta.id();
  n.dim = d;
  return zeta.tape()->record(std::move(n));
}

}  // namespace nmm::ad

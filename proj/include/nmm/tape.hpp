#pragma once

// Minimal define-by-run reverse-mode differentiation over dense row-major
// matrices. Every recorded node holds its forward value; `backward` walks the
// record in reverse and accumulates adjoints. Scalars are 1x1 matrices.
//
// Binary elementwise ops broadcast along any dimension of size 1, so an n x 1
// column combined with a 1 x n row yields an n x n matrix.
//
// One tape per thread; a Tape must not be shared between threads.

#include <Eigen/SparseCore>

#include <cstdint>
#include <memory>
#include <vector>

#include "nmm/manifold.hpp"

namespace nmm::ad {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class Op : std::uint8_t {
  leaf,
  add,
  sub,
  mul,
  div,
  matmul,
  spmm,
  gather,
  tanh,
  artanh,
  arccos,
  arcosh,
  exp,
  log,
  logistic,
  softplus,
  relu,
  abs,
  sqrt,
  clamp,
  sum,
  row_sum,
  row_norm,
  softmax,
  log_partition,
};

const char* op_name(Op op);

class Tape;

class Var {
 public:
  Var() = default;

  int id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }
  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  // Convenience for 1x1 results.
  double scalar() const;

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var variable(Matrix value);
  Var constant(Matrix value);
  Var variable(double value);
  Var constant(double value);

  const Matrix& value(Var v) const;
  // Adjoint of `v` from the last backward pass (zeros if unreached).
  Matrix gradient(Var v) const;

  // Replaces the value of a leaf; call forward() afterwards to refresh
  // dependent nodes.
  void set_value(Var leaf, Matrix value);
  // Recomputes every non-leaf node from its parents, in record order.
  void forward();
  // Seeds d(output)/d(output) = 1 for a 1x1 output and propagates adjoints.
  // Throws NumericalError naming the op if any adjoint becomes non-finite.
  void backward(Var output);

  std::size_t size() const { return nodes_.size(); }

  // Used by the free-function op builders below.
  struct Node {
    Op op = Op::leaf;
    int a = -1;
    int b = -1;
    bool requires_grad = false;
    bool transpose_b = false;
    double lo = 0;
    double hi = 0;
    int dim = 0;
    std::shared_ptr<const SparseMatrix> sparse;
    std::shared_ptr<const std::vector<Eigen::Index>> index;
    Matrix value;
  };
  Var record(Node node);
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }

 private:
  void compute(Node& n) const;
  void propagate(int id, std::vector<Matrix>& adjoints) const;

  std::vector<Node> nodes_;
  std::vector<Matrix> adjoints_;
};

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator+(double a, Var b);
Var operator+(Var a, double b);
Var operator-(double a, Var b);
Var operator-(Var a, double b);
Var operator*(double a, Var b);
Var operator*(Var a, double b);
Var operator/(Var a, double b);
Var operator/(double a, Var b);
Var operator-(Var a);

// a * b, or a * b^T when transpose_b is set.
Var matmul(Var a, Var b, bool transpose_b = false);
// s * x for a constant sparse matrix s.
Var spmm(std::shared_ptr<const SparseMatrix> s, Var x);
// Rows of x selected by `rows` (repeats allowed).
Var gather_rows(Var x, std::shared_ptr<const std::vector<Eigen::Index>> rows);

Var tanh(Var x);
Var artanh(Var x);
Var arccos(Var x);
Var arcosh(Var x);
Var exp(Var x);
Var log(Var x);
Var logistic(Var x);
Var softplus(Var x);
Var relu(Var x);
Var abs(Var x);
Var sqrt(Var x);
// Gradient passes only where lo <= x <= hi.
Var clamp(Var x, double lo, double hi);

Var sum(Var x);       // 1 x 1
Var row_sum(Var x);   // n x 1
Var row_norm(Var x);  // n x 1 Euclidean norms
Var softmax_rows(Var x);
Var mean(Var x);

// log Z(zeta) of the hyperbolic Gaussian prior for a 1x1 zeta.
Var log_partition(Var zeta, int d);

}  // namespace nmm::ad

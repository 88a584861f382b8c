#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mad/errors.hpp"

namespace mad {

using Matrix = Eigen::MatrixXd;

class Node;
using Var = std::shared_ptr<Node>;

/// One vertex of a dynamically built reverse-mode graph. Values are dense
/// 64-bit matrices (vectors are 1xN or Nx1). Leaves persist across steps and
/// accumulate gradients; interior nodes are rebuilt every forward pass.
class Node {
 public:
  Node(Matrix v, bool req, const char* opname)
      : value(std::move(v)), requires_grad(req), op(opname) {}

  Matrix value;
  Matrix grad;  // allocated on first accumulation, same shape as value
  bool requires_grad = false;
  const char* op = "leaf";
  std::array<Var, 2> parents{};
  std::function<void(Node&)> backward_fn;  // pulls this->grad into parents

  bool has_grad() const { return grad.size() != 0; }
  void accumulate(const Matrix& g);
  void zero_grad();

  Eigen::Index rows() const { return value.rows(); }
  Eigen::Index cols() const { return value.cols(); }
  double scalar() const;  // value of a 1x1 node
};

Var leaf(Matrix v, bool trainable = false);
Var constant(Matrix v);
Var scalar_constant(double v);

// --- graph-building free functions -----------------------------------------
Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var add_rowvec(const Var& x, const Var& v);  // v is 1xD, broadcast over rows
Var mul_rowvec(const Var& x, const Var& v);
Var scale(const Var& x, double c);
Var add_scalar(const Var& x, double c);
Var neg(const Var& x);
Var relu(const Var& x);
Var leaky_relu(const Var& x, double slope);
Var sigmoid(const Var& x);
Var abs_elem(const Var& x);
Var exp_elem(const Var& x);
Var pow_const(const Var& x, double c);  // elementwise x^c, zero grad at x=0
Var log_softmax(const Var& logits);     // rowwise, max-subtracted
Var sum_all(const Var& x);              // 1x1
Var mean_all(const Var& x);             // 1x1
Var col_mean(const Var& x);             // 1xD
Var row_sum(const Var& x);              // Nx1
Var row_norm(const Var& x);             // Nx1 Euclidean norm, zero grad at 0
Var take_rows(const Var& table, const std::vector<int>& rows0);   // gather rows
Var gather_cols(const Var& x, const std::vector<int>& cols0);     // Nx1 picks
Var hcat(const Var& a, const Var& b);
Var detach(const Var& x);

/// Reverse sweep from a finite 1x1 loss node. Gradients accumulate into every
/// reachable node with requires_grad; call zero_grad on leaves between steps.
void backward(const Var& loss);

/// Convenience wrapper: zero the listed parameters, run backward, return the
/// per-parameter gradients in order.
std::vector<Matrix> gradients(const Var& loss, const std::vector<Var>& params);

void check_finite(const Matrix& m, const char* op);

}  // namespace mad

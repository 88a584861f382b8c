#include "mad/layers.hpp"

#include <cmath>

namespace mad {

Var activation(const Var& x, Act kind, double slope) {
  switch (kind) {
    case Act::kRelu:
      return relu(x);
    case Act::kLeakyRelu:
      return leaky_relu(x, slope);
    case Act::kSigmoid:
      return sigmoid(x);
  }
  throw ConfigError("activation: unknown kind");
}

Var dense(const Var& x, const Var& w, const Var& b) {
  if (x->cols() != w->rows()) {
    throw ShapeError("dense: input width " + std::to_string(x->cols()) +
                     " does not match weight rows " + std::to_string(w->rows()));
  }
  if (b->rows() != 1 || b->cols() != w->cols()) {
    throw ShapeError("dense: bias must be 1x" + std::to_string(w->cols()));
  }
  return add_rowvec(matmul(x, w), b);
}

DenseLayer DenseLayer::init(int d_in, int d_out, RngState& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(d_in));
  DenseLayer layer;
  layer.w = leaf(rng.uniform_matrix(d_in, d_out, -bound, bound), true);
  layer.b = leaf(rng.uniform_matrix(1, d_out, -bound, bound), true);
  return layer;
}

BatchNorm BatchNorm::init(int d) {
  BatchNorm bn;
  bn.scale = leaf(Matrix::Ones(1, d), true);
  bn.shift = leaf(Matrix::Zero(1, d), true);
  bn.running_mean = Matrix::Zero(1, d);
  bn.running_var = Matrix::Ones(1, d);
  return bn;
}

BatchNorm::Out BatchNorm::forward(const Var& x, BnMode mode) {
  if (x->cols() != scale->cols()) {
    throw ShapeError("batchnorm: feature width " + std::to_string(x->cols()) +
                     " does not match state width " + std::to_string(scale->cols()));
  }
  if (mode != BnMode::kEval && x->rows() < 2) {
    throw ConfigError("batchnorm: batch statistics need at least 2 rows");
  }

  Out out;
  out.mu = col_mean(x);
  Var centered = add_rowvec(x, neg(out.mu));
  out.omega = col_mean(mul(centered, centered));

  if (mode == BnMode::kEval) {
    Var xc = add_rowvec(x, constant(-running_mean));
    Var inv = constant((running_var.array() + epsilon).pow(-0.5).matrix());
    out.y = add_rowvec(mul_rowvec(xc, mul(scale, inv)), shift);
    return out;
  }

  if (mode == BnMode::kTrain) {
    running_mean = (1.0 - momentum) * running_mean + momentum * out.mu->value;
    running_var = (1.0 - momentum) * running_var + momentum * out.omega->value;
    // Keep the strictly-positive invariant even for degenerate batches.
    running_var = running_var.cwiseMax(1e-300);
  }

  Var inv = pow_const(add_scalar(out.omega, epsilon), -0.5);
  out.y = add_rowvec(mul_rowvec(mul_rowvec(centered, inv), scale), shift);
  return out;
}

}  // namespace mad

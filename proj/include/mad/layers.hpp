#pragma once

#include <vector>

#include "mad/rng.hpp"
#include "mad/tensor.hpp"

namespace mad {

enum class Act { kRelu, kLeakyRelu, kSigmoid };

/// Elementwise nonlinearity. The leaky slope default follows the generator
/// blocks this project mirrors.
Var activation(const Var& x, Act kind, double slope = 0.2);

/// Row-wise affine map x*W + b.
Var dense(const Var& x, const Var& w, const Var& b);

struct DenseLayer {
  Var w;  // d_in x d_out
  Var b;  // 1 x d_out

  Var forward(const Var& x) const { return dense(x, w, b); }
  // Fan-in scaled uniform init: U(-1/sqrt(d_in), 1/sqrt(d_in)).
  static DenseLayer init(int d_in, int d_out, RngState& rng);
};

enum class BnMode {
  kTrain,   // normalize by batch moments, update running stats
  kFrozen,  // normalize by batch moments, leave running stats untouched
  kEval,    // normalize by running stats
};

struct BatchNorm {
  Var scale;  // 1 x d
  Var shift;  // 1 x d
  Matrix running_mean;
  Matrix running_var;  // biased, strictly positive
  double momentum = 0.1;
  double epsilon = 1e-5;

  struct Out {
    Var y;
    Var mu;     // batch mean, 1 x d
    Var omega;  // biased batch variance, 1 x d
  };

  // Batch moments come back in every mode so callers can match them against
  // the running ones.
  Out forward(const Var& x, BnMode mode);

  static BatchNorm init(int d);
};

}  // namespace mad

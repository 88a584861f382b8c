#pragma once

#include <vector>

#include "mad/tensor.hpp"

namespace mad {

enum class OptRule { kSgdMomentum, kAdam };

/// Update-rule state for one parameter list. Weight decay is coupled into the
/// gradient (classic style) for both rules.
struct OptimState {
  OptRule rule = OptRule::kSgdMomentum;
  double lr = 1e-2;
  double wd = 0.0;
  double momentum = 0.0;   // SGD only
  double beta1 = 0.9;      // Adam
  double beta2 = 0.999;
  double eps = 1e-8;
  long step_count = 0;
  std::vector<Matrix> m1;  // momentum buffer / first moment
  std::vector<Matrix> m2;  // second moment (Adam)

  static OptimState sgd(double lr, double wd, double momentum);
  static OptimState adam(double lr, double wd);
};

// buf <- mo*buf + (grad + wd*theta); theta <- theta - lr*buf
void sgd_step(const std::vector<Var>& params, OptimState& state);

// Standard bias-corrected Adam on (grad + wd*theta).
void adam_step(const std::vector<Var>& params, OptimState& state);

void optim_step(const std::vector<Var>& params, OptimState& state);

/// Linear warm-up to the base rate over the first warmup_epochs epochs, then
/// one decay factor per passed decay epoch.
struct LrSchedule {
  double base = 1e-2;
  double decay = 1.0;               // factor in (0,1]
  std::vector<int> decay_epochs;    // strictly increasing
  int warmup_epochs = 0;
};

double lr_at(const LrSchedule& schedule, int epoch);

}  // namespace mad

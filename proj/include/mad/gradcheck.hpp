#pragma once

#include <functional>
#include <vector>

#include "mad/rng.hpp"
#include "mad/tensor.hpp"

namespace mad {

struct FdOptions {
  double eps = 1e-5;
  // Nets above this many parameters are checked on a random coordinate
  // subsample; smaller nets get a full sweep.
  int subsample_threshold = 10000;
  int subsample_size = 128;
  std::uint64_t seed = 0;
  // Relative error floor: |a-f| / max(|a|, |f|, floor).
  double denom_floor = 1e-3;
};

/// Compares the analytic gradient of loss_fn() with central finite
/// differences over the given parameters and returns the max relative error.
/// loss_fn must rebuild the graph from the parameters' current values.
double finite_diff_check(const std::function<Var()>& loss_fn,
                         const std::vector<Var>& params,
                         const FdOptions& opts = {});

}  // namespace mad

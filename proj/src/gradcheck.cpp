#include "mad/gradcheck.hpp"

#include <cmath>

namespace mad {

double finite_diff_check(const std::function<Var()>& loss_fn,
                         const std::vector<Var>& params, const FdOptions& opts) {
  if (opts.eps <= 0.0) {
    throw ConfigError("finite_diff_check: eps must be positive");
  }
  const std::vector<Matrix> analytic = gradients(loss_fn(), params);

  long total = 0;
  for (const Var& p : params) total += p->value.size();
  const bool sweep_all = total <= opts.subsample_threshold;
  const long n_checks = sweep_all ? total : std::max(100L, static_cast<long>(opts.subsample_size));

  RngState rng(opts.seed, 0xFD);
  double max_rel = 0.0;
  for (long k = 0; k < n_checks; ++k) {
    long flat = sweep_all ? k : static_cast<long>(rng.uniform_int(static_cast<std::uint64_t>(total)));
    std::size_t pi = 0;
    while (flat >= params[pi]->value.size()) {
      flat -= params[pi]->value.size();
      ++pi;
    }
    double* slot = params[pi]->value.data() + flat;
    const double saved = *slot;

    *slot = saved + opts.eps;
    const double f_plus = loss_fn()->scalar();
    *slot = saved - opts.eps;
    const double f_minus = loss_fn()->scalar();
    *slot = saved;

    const double fd = (f_plus - f_minus) / (2.0 * opts.eps);
    const double a = *(analytic[pi].data() + flat);
    const double denom = std::max({std::abs(a), std::abs(fd), opts.denom_floor});
    max_rel = std::max(max_rel, std::abs(a - fd) / denom);
  }
  return max_rel;
}

}  // namespace mad

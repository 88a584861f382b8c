#pragma once

#include <vector>

#include "mad/tensor.hpp"

namespace mad {

/// Batch-mean KL divergence between teacher and student class probabilities,
/// computed from logits entirely in log-space. Gradients flow into both logit
/// tensors, so either side of the min-max game can be trained through it.
Var kd_loss(const Var& t_logits, const Var& s_logits);

/// Batch-mean negative log-likelihood of 1-based labels under the logits.
Var nll_loss(const Var& logits, const std::vector<int>& labels);

/// Batch-mean hinge on embedding norms: max(||e||_2 - gamma*sqrt(d_e), 0).
Var norm_reg_loss(const Var& e_rows, double gamma);

/// Sum over layers of squared L2 gaps between batch and running moments.
/// Running moments are constants; gradients reach only the batch side.
Var bnmm_loss(const std::vector<Var>& batch_mu, const std::vector<Var>& batch_omega,
              const std::vector<Matrix>& running_mu,
              const std::vector<Matrix>& running_omega);

/// Mean over elements of max(|v| - bound, 0).
Var clamp_penalty(const Var& v, double bound);

/// Batch-mean Jensen-Shannon divergence between probability rows, natural
/// log. Rows must sum to 1 within 1e-6. Diagnostic only, not differentiable.
double js_divergence(const Matrix& p, const Matrix& q);

struct StudentLossWeights {
  double lambda0 = 1.0;
  double lambda1 = 1.0;
  double zeta0 = 0.01;
  double delta = 20.0;
};

struct GeneratorLossWeights {
  double lambda2 = 1.0;
  double lambda3 = 0.0;
  double lambda4 = 0.0;
  double lambda5 = 1.0;
  double zeta1 = 0.1;
  double zeta2 = 0.1;
  double delta = 20.0;
  double nu = 20.0;
  double gamma = 1.1;
};

/// Named raw components plus the weighted total. clamp_student aggregates the
/// two student stream clamps with their lambda weights so that
/// total = lambda0*kd_gen + lambda1*kd_ema + zeta0*clamp_student (student) or
/// total = -lambda2*kd_gen + lambda3*nll + lambda4*norm_reg + lambda5*bnmm
///         + zeta1*clamp_teacher + zeta2*clamp_gen_logit (generator).
struct LossBreakdown {
  double kd_gen = 0.0;
  double kd_ema = 0.0;
  double nll = 0.0;
  double norm_reg = 0.0;
  double bnmm = 0.0;
  double clamp_student = 0.0;
  double clamp_teacher = 0.0;
  double clamp_gen_logit = 0.0;
  double total = 0.0;
  Var node;  // differentiable total
};

/// Student objective over the fresh-generator stream and, when lambda1 > 0,
/// the EMA stream (pass null EMA logits otherwise).
LossBreakdown student_loss(const Var& t_logits_gen, const Var& s_logits_gen,
                           const Var& t_logits_ema, const Var& s_logits_ema,
                           const StudentLossWeights& w);

/// Generator objective. e_rows is null in unconditional mode; labels may be
/// empty whenever lambda3 == 0.
LossBreakdown generator_loss(const Var& t_logits, const Var& s_logits, const Var& u,
                             const std::vector<int>& labels, const Var& e_rows,
                             const std::vector<Var>& batch_mu,
                             const std::vector<Var>& batch_omega,
                             const std::vector<Matrix>& running_mu,
                             const std::vector<Matrix>& running_omega,
                             const GeneratorLossWeights& w);

}  // namespace mad

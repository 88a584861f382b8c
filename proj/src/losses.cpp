#include "mad/losses.hpp"

#include <cmath>

namespace mad {

namespace {

void require_same_shape(const Var& a, const Var& b, const char* what) {
  if (a->rows() != b->rows() || a->cols() != b->cols()) {
    throw ShapeError(std::string(what) + ": logit shapes disagree");
  }
}

std::vector<int> zero_based(const std::vector<int>& labels, Eigen::Index n_classes,
                            const char* what) {
  std::vector<int> idx(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 1 || labels[i] > n_classes) {
      throw ConfigError(std::string(what) + ": label " + std::to_string(labels[i]) +
                        " outside [1," + std::to_string(n_classes) + "]");
    }
    idx[i] = labels[i] - 1;
  }
  return idx;
}

}  // namespace

Var kd_loss(const Var& t_logits, const Var& s_logits) {
  require_same_shape(t_logits, s_logits, "kd_loss");
  Var lsm_t = log_softmax(t_logits);
  Var lsm_s = log_softmax(s_logits);
  Var p_t = exp_elem(lsm_t);
  Var per_row = row_sum(mul(p_t, sub(lsm_t, lsm_s)));
  return scale(sum_all(per_row), 1.0 / static_cast<double>(t_logits->rows()));
}

Var nll_loss(const Var& logits, const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != logits->rows()) {
    throw ShapeError("nll_loss: need one label per row");
  }
  std::vector<int> idx = zero_based(labels, logits->cols(), "nll_loss");
  Var picked = gather_cols(log_softmax(logits), idx);
  return neg(mean_all(picked));
}

Var norm_reg_loss(const Var& e_rows, double gamma) {
  if (gamma < 1.0) throw ConfigError("norm_reg_loss: gamma must be >= 1");
  const double radius = gamma * std::sqrt(static_cast<double>(e_rows->cols()));
  Var excess = relu(add_scalar(row_norm(e_rows), -radius));
  return mean_all(excess);
}

Var bnmm_loss(const std::vector<Var>& batch_mu, const std::vector<Var>& batch_omega,
              const std::vector<Matrix>& running_mu,
              const std::vector<Matrix>& running_omega) {
  if (batch_mu.size() != running_mu.size() || batch_omega.size() != running_omega.size() ||
      batch_mu.size() != batch_omega.size()) {
    throw ShapeError("bnmm_loss: layer count mismatch between batch and running moments");
  }
  Var total = scalar_constant(0.0);
  for (std::size_t l = 0; l < batch_mu.size(); ++l) {
    Var dmu = sub(batch_mu[l], constant(running_mu[l]));
    Var domega = sub(batch_omega[l], constant(running_omega[l]));
    total = add(total, add(sum_all(mul(dmu, dmu)), sum_all(mul(domega, domega))));
  }
  return total;
}

Var clamp_penalty(const Var& v, double bound) {
  if (bound <= 0.0) throw ConfigError("clamp_penalty: bound must be positive");
  return mean_all(relu(add_scalar(abs_elem(v), -bound)));
}

double js_divergence(const Matrix& p, const Matrix& q) {
  if (p.rows() != q.rows() || p.cols() != q.cols()) {
    throw ShapeError("js_divergence: shapes disagree");
  }
  auto check_rows = [](const Matrix& m, const char* side) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (std::abs(m.row(i).sum() - 1.0) > 1e-6 || m.row(i).minCoeff() < 0.0) {
        throw ConfigError(std::string("js_divergence: ") + side + " row " + std::to_string(i) +
                          " is not a probability vector");
      }
    }
  };
  check_rows(p, "p");
  check_rows(q, "q");

  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      const double m = 0.5 * (p(i, j) + q(i, j));
      if (p(i, j) > 0.0) row += 0.5 * p(i, j) * std::log(p(i, j) / m);
      if (q(i, j) > 0.0) row += 0.5 * q(i, j) * std::log(q(i, j) / m);
    }
    acc += row;
  }
  return acc / static_cast<double>(p.rows());
}

LossBreakdown student_loss(const Var& t_logits_gen, const Var& s_logits_gen,
                           const Var& t_logits_ema, const Var& s_logits_ema,
                           const StudentLossWeights& w) {
  if (w.lambda0 < 0.0 || w.lambda1 < 0.0) {
    throw ConfigError("student_loss: lambda0 and lambda1 must be non-negative");
  }
  LossBreakdown out;
  Var kd_g = kd_loss(t_logits_gen, s_logits_gen);
  Var clamp_g = clamp_penalty(s_logits_gen, w.delta);
  out.kd_gen = kd_g->scalar();

  Var clamp_combined = scale(clamp_g, w.lambda0);
  Var node = scale(add(kd_g, scale(clamp_g, w.zeta0)), w.lambda0);

  if (w.lambda1 > 0.0) {
    if (!t_logits_ema || !s_logits_ema) {
      throw ConfigError("student_loss: lambda1 > 0 needs the EMA logit stream");
    }
    Var kd_e = kd_loss(t_logits_ema, s_logits_ema);
    Var clamp_e = clamp_penalty(s_logits_ema, w.delta);
    out.kd_ema = kd_e->scalar();
    clamp_combined = add(clamp_combined, scale(clamp_e, w.lambda1));
    node = add(node, scale(add(kd_e, scale(clamp_e, w.zeta0)), w.lambda1));
  }
  out.clamp_student = clamp_combined->scalar();
  out.node = node;
  out.total = node->scalar();
  return out;
}

LossBreakdown generator_loss(const Var& t_logits, const Var& s_logits, const Var& u,
                             const std::vector<int>& labels, const Var& e_rows,
                             const std::vector<Var>& batch_mu,
                             const std::vector<Var>& batch_omega,
                             const std::vector<Matrix>& running_mu,
                             const std::vector<Matrix>& running_omega,
                             const GeneratorLossWeights& w) {
  if (w.lambda2 < 0.0 || w.lambda3 < 0.0 || w.lambda4 < 0.0 || w.lambda5 < 0.0 ||
      w.zeta1 < 0.0 || w.zeta2 < 0.0) {
    throw ConfigError("generator_loss: loss weights must be non-negative");
  }
  if (!e_rows && (w.lambda3 > 0.0 || w.lambda4 > 0.0)) {
    throw ConfigError("generator_loss: conditional terms requested in uncond mode");
  }

  LossBreakdown out;
  Var kd = kd_loss(t_logits, s_logits);
  out.kd_gen = kd->scalar();
  Var node = scale(kd, -w.lambda2);

  if (w.lambda3 > 0.0) {
    Var nll = nll_loss(t_logits, labels);
    out.nll = nll->scalar();
    node = add(node, scale(nll, w.lambda3));
  }
  if (w.lambda4 > 0.0) {
    Var reg = norm_reg_loss(e_rows, w.gamma);
    out.norm_reg = reg->scalar();
    node = add(node, scale(reg, w.lambda4));
  }
  if (w.lambda5 > 0.0) {
    Var bn = bnmm_loss(batch_mu, batch_omega, running_mu, running_omega);
    out.bnmm = bn->scalar();
    node = add(node, scale(bn, w.lambda5));
  }
  Var clamp_t = clamp_penalty(t_logits, w.delta);
  Var clamp_u = clamp_penalty(u, w.nu);
  out.clamp_teacher = clamp_t->scalar();
  out.clamp_gen_logit = clamp_u->scalar();
  node = add(node, add(scale(clamp_t, w.zeta1), scale(clamp_u, w.zeta2)));

  out.node = node;
  out.total = node->scalar();
  return out;
}

}  // namespace mad

#include "mad/optim.hpp"

#include <cmath>

namespace mad {

namespace {

void prepare(const std::vector<Var>& params, OptimState& state, bool second_moment) {
  if (state.m1.empty()) {
    for (const Var& p : params) state.m1.push_back(Matrix::Zero(p->rows(), p->cols()));
    if (second_moment) {
      for (const Var& p : params) state.m2.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
  if (state.m1.size() != params.size()) {
    throw ShapeError("optimizer: parameter count changed under a live state");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Var& p = params[i];
    if (!p->has_grad()) p->zero_grad();
    if (p->grad.rows() != p->value.rows() || p->grad.cols() != p->value.cols() ||
        state.m1[i].rows() != p->value.rows() || state.m1[i].cols() != p->value.cols()) {
      throw ShapeError("optimizer: accumulator/gradient shape mismatch at parameter " +
                       std::to_string(i));
    }
    check_finite(p->grad, "gradient");
  }
}

}  // namespace

OptimState OptimState::sgd(double lr, double wd, double momentum) {
  OptimState s;
  s.rule = OptRule::kSgdMomentum;
  s.lr = lr;
  s.wd = wd;
  s.momentum = momentum;
  return s;
}

OptimState OptimState::adam(double lr, double wd) {
  OptimState s;
  s.rule = OptRule::kAdam;
  s.lr = lr;
  s.wd = wd;
  return s;
}

void sgd_step(const std::vector<Var>& params, OptimState& state) {
  prepare(params, state, /*second_moment=*/false);
  ++state.step_count;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Node& p = *params[i];
    const Matrix g = p.grad + state.wd * p.value;
    state.m1[i] = state.momentum * state.m1[i] + g;
    p.value -= state.lr * state.m1[i];
    check_finite(p.value, "sgd_step");
  }
}

void adam_step(const std::vector<Var>& params, OptimState& state) {
  prepare(params, state, /*second_moment=*/true);
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Node& p = *params[i];
    const Matrix g = p.grad + state.wd * p.value;
    state.m1[i] = state.beta1 * state.m1[i] + (1.0 - state.beta1) * g;
    state.m2[i] = state.beta2 * state.m2[i] + (1.0 - state.beta2) * g.cwiseProduct(g);
    const Matrix m_hat = state.m1[i] / c1;
    const Matrix v_hat = state.m2[i] / c2;
    p.value.array() -= state.lr * m_hat.array() / (v_hat.array().sqrt() + state.eps);
    check_finite(p.value, "adam_step");
  }
}

void optim_step(const std::vector<Var>& params, OptimState& state) {
  if (state.rule == OptRule::kSgdMomentum) {
    sgd_step(params, state);
  } else {
    adam_step(params, state);
  }
}

double lr_at(const LrSchedule& schedule, int epoch) {
  if (epoch < 0) throw ConfigError("lr_at: epoch must be non-negative");
  if (schedule.warmup_epochs > 0 && epoch < schedule.warmup_epochs) {
    return schedule.base * static_cast<double>(epoch + 1) /
           static_cast<double>(schedule.warmup_epochs);
  }
  double lr = schedule.base;
  for (int de : schedule.decay_epochs) {
    if (epoch >= de) lr *= schedule.decay;
  }
  return lr;
}

}  // namespace mad

#include "mad/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace mad {

namespace {

std::string dims(const Var& v) {
  return std::to_string(v->rows()) + "x" + std::to_string(v->cols());
}

[[noreturn]] void shape_fail(const char* op, const Var& a, const Var& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + dims(a) + " and " + dims(b));
}

Var make(Matrix value, const char* op, const Var& a, const Var& b = nullptr) {
  check_finite(value, op);
  const bool req = a->requires_grad || (b && b->requires_grad);
  auto n = std::make_shared<Node>(std::move(value), req, op);
  n->parents = {a, b};
  return n;
}

// Elementwise unary op; df receives (input, output) entries.
template <class F, class DF>
Var unary(const Var& x, const char* op, F f, DF df) {
  Var out = make(x->value.unaryExpr(f), op, x);
  if (out->requires_grad) {
    Node* px = x.get();
    out->backward_fn = [px, df](Node& self) {
      if (!px->requires_grad) return;
      px->accumulate(self.grad.binaryExpr(
          px->value, [&](double g, double xi) { return g * df(xi); }));
    };
  }
  return out;
}

}  // namespace

void check_finite(const Matrix& m, const char* op) {
  if (!m.allFinite()) {
    throw NumericalError(std::string("non-finite values produced by '") + op + "'");
  }
}

void Node::accumulate(const Matrix& g) {
  if (!has_grad()) {
    grad = g;
  } else {
    grad += g;
  }
}

void Node::zero_grad() {
  if (has_grad()) {
    grad.setZero();
  } else {
    grad = Matrix::Zero(value.rows(), value.cols());
  }
}

double Node::scalar() const {
  if (value.size() != 1) {
    throw ShapeError(std::string("scalar(): node '") + op + "' has size " +
                     std::to_string(value.size()));
  }
  return value(0, 0);
}

Var leaf(Matrix v, bool trainable) {
  check_finite(v, "leaf");
  return std::make_shared<Node>(std::move(v), trainable, "leaf");
}

Var constant(Matrix v) { return leaf(std::move(v), false); }

Var scalar_constant(double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return constant(m);
}

Var matmul(const Var& a, const Var& b) {
  if (a->cols() != b->rows()) shape_fail("matmul", a, b);
  Var out = make(a->value * b->value, "matmul", a, b);
  if (out->requires_grad) {
    Node* pa = a.get();
    Node* pb = b.get();
    out->backward_fn = [pa, pb](Node& self) {
      if (pa->requires_grad) pa->accumulate(self.grad * pb->value.transpose());
      if (pb->requires_grad) pb->accumulate(pa->value.transpose() * self.grad);
    };
  }
  return out;
}

Var add(const Var& a, const Var& b) {
  if (a->rows() != b->rows() || a->cols() != b->cols()) shape_fail("add", a, b);
  Var out = make(a->value + b->value, "add", a, b);
  if (out->requires_grad) {
    Node* pa = a.get();
    Node* pb = b.get();
    out->backward_fn = [pa, pb](Node& self) {
      if (pa->requires_grad) pa->accumulate(self.grad);
      if (pb->requires_grad) pb->accumulate(self.grad);
    };
  }
  return out;
}

Var sub(const Var& a, const Var& b) {
  if (a->rows() != b->rows() || a->cols() != b->cols()) shape_fail("sub", a, b);
  Var out = make(a->value - b->value, "sub", a, b);
  if (out->requires_grad) {
    Node* pa = a.get();
    Node* pb = b.get();
    out->backward_fn = [pa, pb](Node& self) {
      if (pa->requires_grad) pa->accumulate(self.grad);
      if (pb->requires_grad) pb->accumulate(-self.grad);
    };
  }
  return out;
}

Var mul(const Var& a, const Var& b) {
  if (a->rows() != b->rows() || a->cols() != b->cols()) shape_fail("mul", a, b);
  Var out = make(a->value.cwiseProduct(b->value), "mul", a, b);
  if (out->requires_grad) {
    Node* pa = a.get();
    Node* pb = b.get();
    out->backward_fn = [pa, pb](Node& self) {
      if (pa->requires_grad) pa->accumulate(self.grad.cwiseProduct(pb->value));
      if (pb->requires_grad) pb->accumulate(self.grad.cwiseProduct(pa->value));
    };
  }
  return out;
}

Var add_rowvec(const Var& x, const Var& v) {
  if (v->rows() != 1 || v->cols() != x->cols()) shape_fail("add_rowvec", x, v);
  Matrix value = x->value;
  value.rowwise() += v->value.row(0);
  Var out = make(std::move(value), "add_rowvec", x, v);
  if (out->requires_grad) {
    Node* px = x.get();
    Node* pv = v.get();
    out->backward_fn = [px, pv](Node& self) {
      if (px->requires_grad) px->accumulate(self.grad);
      if (pv->requires_grad) pv->accumulate(self.grad.colwise().sum());
    };
  }
  return out;
}

Var mul_rowvec(const Var& x, const Var& v) {
  if (v->rows() != 1 || v->cols() != x->cols()) shape_fail("mul_rowvec", x, v);
  Matrix value = (x->value.array().rowwise() * v->value.row(0).array()).matrix();
  Var out = make(std::move(value), "mul_rowvec", x, v);
  if (out->requires_grad) {
    Node* px = x.get();
    Node* pv = v.get();
    out->backward_fn = [px, pv](Node& self) {
      if (px->requires_grad) {
        px->accumulate((self.grad.array().rowwise() * pv->value.row(0).array()).matrix());
      }
      if (pv->requires_grad) {
        pv->accumulate(self.grad.cwiseProduct(px->value).colwise().sum());
      }
    };
  }
  return out;
}

Var scale(const Var& x, double c) {
  Var out = make(x->value * c, "scale", x);
  if (out->requires_grad) {
    Node* px = x.get();
    out->backward_fn = [px, c](Node& self) {
      if (px->requires_grad) px->accumulate(self.grad * c);
    };
  }
  return out;
}

Var add_scalar(const Var& x, double c) {
  Var out = make(x->value.array() + c, "add_scalar", x);
  if (out->requires_grad) {
    Node* px = x.get();
    out->backward_fn = [px](Node& self) {
      if (px->requires_grad) px->accumulate(self.grad);
    };
  }
  return out;
}

Var neg(const Var& x) { return scale(x, -1.0); }

Var relu(const Var& x) {
  return unary(
      x, "relu", [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v) { return v > 0.0 ? 1.0 : 0.0; });
}

Var leaky_relu(const Var& x, double slope) {
  return unary(
      x, "leaky_relu", [slope](double v) { return v > 0.0 ? v : slope * v; },
      [slope](double v) { return v > 0.0 ? 1.0 : slope; });
}

Var sigmoid(const Var& x) {
  auto sig = [](double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  };
  Var out = make(x->value.unaryExpr(sig), "sigmoid", x);
  if (out->requires_grad) {
    Node* px = x.get();
    out->backward_fn = [px](Node& self) {
      if (!px->requires_grad) return;
      px->accumulate(self.grad.binaryExpr(
          self.value, [](double g, double y) { return g * y * (1.0 - y); }));
    };
  }
  return out;
}

Var abs_elem(const Var& x) {
  return unary(
      x, "abs", [](double v) { return std::abs(v); },
      [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Var exp_elem(const Var& x) {
  Var out = make(x->value.array().exp(), "exp", x);
  if (out->requires_grad) {
    Node* px = x.get();
    out->backward_fn = [px](Node& self) {
      if (px->requires_grad) px->accumulate(self.grad.cwiseProduct(self.value));
    };
  }
  return out;
}

Var pow_const(const Var& x, double c) {
  Var out = make(x->value.array().pow(c), "pow_const", x);
  if (out->requires_grad) {
    Node* px = x.get();
    out->backward_fn = [px, c](Node& self) {
      if (!px->requires_grad) return;
      px->accumulate(self.grad.binaryExpr(px->value, [c](double g, double xi) {
        return xi == 0.0 ? 0.0 : g * c * std::pow(xi, c - 1.0);
      }));
    };
  }
  return out;
}

Var log_softmax(const Var& logits) {
  Matrix out(logits->rows(), logits->cols());
  for (Eigen::Index i = 0; i < logits->rows(); ++i) {
    const double m = logits->value.row(i).maxCoeff();
    const double lse = std::log((logits->value.row(i).array() - m).exp().sum());
    out.row(i) = logits->value.row(i).array() - m - lse;
  }
  Var node = make(std::move(out), "log_softmax", logits);
  if (node->requires_grad) {
    Node* px = logits.get();
    node->backward_fn = [px](Node& self) {
      if (!px->requires_grad) return;
      // dx = g - softmax .* rowsum(g)
      Matrix g = self.grad;
      const Matrix p = self.value.array().exp();
      for (Eigen::Index i = 0; i < g.rows(); ++i) {
        g.row(i) -= p.row(i) * self.grad.row(i).sum();
      }
      px->accumulate(g);
    };
  }
  return node;
}

Var sum_all(const Var& x) {
  Matrix v(1, 1);
  v(0, 0) = x->value.sum();
  Var out = make(std::move(v), "sum_all", x);
  if (out->requires_grad) {
    Node* px = x.get();
    out->backward_fn = [px](Node& self) {
      if (!px->requires_grad) return;
      px->accumulate(Matrix::Constant(px->value.rows(), px->value.cols(), self.grad(0, 0)));
    };
  }
  return out;
}

Var mean_all(const Var& x) {
  return scale(sum_all(x), 1.0 / static_cast<double>(x->value.size()));
}

Var col_mean(const Var& x) {
  const double n = static_cast<double>(x->rows());
  Var out = make(x->value.colwise().mean(), "col_mean", x);
  if (out->requires_grad) {
    Node* px = x.get();
    out->backward_fn = [px, n](Node& self) {
      if (!px->requires_grad) return;
      px->accumulate(self.grad.replicate(px->value.rows(), 1) / n);
    };
  }
  return out;
}

Var row_sum(const Var& x) {
  Var out = make(x->value.rowwise().sum(), "row_sum", x);
  if (out->requires_grad) {
    Node* px = x.get();
    out->backward_fn = [px](Node& self) {
      if (!px->requires_grad) return;
      px->accumulate(self.grad.replicate(1, px->value.cols()));
    };
  }
  return out;
}

Var row_norm(const Var& x) {
  Var out = make(x->value.rowwise().norm(), "row_norm", x);
  if (out->requires_grad) {
    Node* px = x.get();
    out->backward_fn = [px](Node& self) {
      if (!px->requires_grad) return;
      Matrix g(px->value.rows(), px->value.cols());
      for (Eigen::Index i = 0; i < g.rows(); ++i) {
        const double norm = self.value(i, 0);
        if (norm > 0.0) {
          g.row(i) = self.grad(i, 0) * px->value.row(i) / norm;
        } else {
          g.row(i).setZero();
        }
      }
      px->accumulate(g);
    };
  }
  return out;
}

Var take_rows(const Var& table, const std::vector<int>& rows0) {
  const Eigen::Index n = static_cast<Eigen::Index>(rows0.size());
  Matrix v(n, table->cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const int r = rows0[static_cast<std::size_t>(i)];
    if (r < 0 || r >= table->rows()) {
      throw ShapeError("take_rows: index " + std::to_string(r) + " out of range [0," +
                       std::to_string(table->rows()) + ")");
    }
    v.row(i) = table->value.row(r);
  }
  Var out = make(std::move(v), "take_rows", table);
  if (out->requires_grad) {
    Node* pt = table.get();
    out->backward_fn = [pt, rows0](Node& self) {
      if (!pt->requires_grad) return;
      Matrix g = Matrix::Zero(pt->value.rows(), pt->value.cols());
      for (Eigen::Index i = 0; i < self.grad.rows(); ++i) {
        g.row(rows0[static_cast<std::size_t>(i)]) += self.grad.row(i);
      }
      pt->accumulate(g);
    };
  }
  return out;
}

Var gather_cols(const Var& x, const std::vector<int>& cols0) {
  if (static_cast<Eigen::Index>(cols0.size()) != x->rows()) {
    throw ShapeError("gather_cols: need one column index per row");
  }
  Matrix v(x->rows(), 1);
  for (Eigen::Index i = 0; i < x->rows(); ++i) {
    const int c = cols0[static_cast<std::size_t>(i)];
    if (c < 0 || c >= x->cols()) {
      throw ShapeError("gather_cols: index " + std::to_string(c) + " out of range [0," +
                       std::to_string(x->cols()) + ")");
    }
    v(i, 0) = x->value(i, c);
  }
  Var out = make(std::move(v), "gather_cols", x);
  if (out->requires_grad) {
    Node* px = x.get();
    out->backward_fn = [px, cols0](Node& self) {
      if (!px->requires_grad) return;
      Matrix g = Matrix::Zero(px->value.rows(), px->value.cols());
      for (Eigen::Index i = 0; i < g.rows(); ++i) {
        g(i, cols0[static_cast<std::size_t>(i)]) += self.grad(i, 0);
      }
      px->accumulate(g);
    };
  }
  return out;
}

Var hcat(const Var& a, const Var& b) {
  if (a->rows() != b->rows()) shape_fail("hcat", a, b);
  Matrix v(a->rows(), a->cols() + b->cols());
  v << a->value, b->value;
  Var out = make(std::move(v), "hcat", a, b);
  if (out->requires_grad) {
    Node* pa = a.get();
    Node* pb = b.get();
    const Eigen::Index ca = a->cols();
    const Eigen::Index cb = b->cols();
    out->backward_fn = [pa, pb, ca, cb](Node& self) {
      if (pa->requires_grad) pa->accumulate(self.grad.leftCols(ca));
      if (pb->requires_grad) pb->accumulate(self.grad.rightCols(cb));
    };
  }
  return out;
}

Var detach(const Var& x) { return constant(x->value); }

void backward(const Var& loss) {
  if (loss->value.size() != 1) {
    throw ShapeError("backward: loss must be a 1x1 node");
  }
  check_finite(loss->value, loss->op);
  if (!loss->requires_grad) return;

  // Iterative post-order over the requires_grad subgraph.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, int>> stack{{loss.get(), 0}};
  visited.insert(loss.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    bool descended = false;
    while (next < 2) {
      const Var& p = node->parents[static_cast<std::size_t>(next++)];
      if (p && p->requires_grad && !visited.count(p.get())) {
        visited.insert(p.get());
        stack.emplace_back(p.get(), 0);
        descended = true;
        break;
      }
    }
    if (!descended && next >= 2) {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss->accumulate(Matrix::Constant(1, 1, 1.0));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && n->has_grad()) n->backward_fn(*n);
  }
}

std::vector<Matrix> gradients(const Var& loss, const std::vector<Var>& params) {
  for (const Var& p : params) p->zero_grad();
  backward(loss);
  std::vector<Matrix> out;
  out.reserve(params.size());
  for (const Var& p : params) {
    check_finite(p->grad, p->op);
    out.push_back(p->grad);
  }
  return out;
}

}  // namespace mad

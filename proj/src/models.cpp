#include "mad/models.hpp"

namespace mad {

namespace {

void append_block_tensors(std::vector<std::pair<std::string, Matrix*>>& out,
                          std::vector<DenseLayer>& blocks, std::vector<BatchNorm>& norms,
                          DenseLayer& head) {
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const std::string p = "layer" + std::to_string(i) + ".";
    out.emplace_back(p + "W", &blocks[i].w->value);
    out.emplace_back(p + "b", &blocks[i].b->value);
    out.emplace_back(p + "bn.scale", &norms[i].scale->value);
    out.emplace_back(p + "bn.shift", &norms[i].shift->value);
    out.emplace_back(p + "bn.running_mean", &norms[i].running_mean);
    out.emplace_back(p + "bn.running_var", &norms[i].running_var);
  }
  out.emplace_back("head.W", &head.w->value);
  out.emplace_back("head.b", &head.b->value);
}

std::vector<DenseLayer> clone_blocks(const std::vector<DenseLayer>& blocks) {
  std::vector<DenseLayer> out;
  out.reserve(blocks.size());
  for (const DenseLayer& d : blocks) {
    out.push_back({leaf(d.w->value, d.w->requires_grad), leaf(d.b->value, d.b->requires_grad)});
  }
  return out;
}

std::vector<BatchNorm> clone_norms(const std::vector<BatchNorm>& norms) {
  std::vector<BatchNorm> out;
  out.reserve(norms.size());
  for (const BatchNorm& n : norms) {
    BatchNorm c;
    c.scale = leaf(n.scale->value, n.scale->requires_grad);
    c.shift = leaf(n.shift->value, n.shift->requires_grad);
    c.running_mean = n.running_mean;
    c.running_var = n.running_var;
    c.momentum = n.momentum;
    c.epsilon = n.epsilon;
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

ClassifierNet build_classifier(int d_in, const std::vector<int>& hidden, int n_classes,
                               RngState rng) {
  if (n_classes < 2) throw ConfigError("build_classifier: need at least 2 classes");
  if (hidden.empty()) throw ConfigError("build_classifier: hidden layer list is empty");

  ClassifierNet net;
  net.d_in = d_in;
  net.n_classes = n_classes;
  net.hidden = hidden;
  int width = d_in;
  for (int h : hidden) {
    if (h < 1) throw ConfigError("build_classifier: hidden width must be positive");
    net.blocks.push_back(DenseLayer::init(width, h, rng));
    net.norms.push_back(BatchNorm::init(h));
    width = h;
  }
  net.head = DenseLayer::init(width, n_classes, rng);
  return net;
}

ClassifierNet::Out ClassifierNet::forward(const Var& x, BnMode mode) {
  if (x->cols() != d_in) {
    throw ShapeError("classifier forward: expected input width " + std::to_string(d_in) +
                     ", got " + std::to_string(x->cols()));
  }
  Out out;
  Var h = x;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    h = blocks[i].forward(h);
    BatchNorm::Out bn = norms[i].forward(h, mode);
    out.bn_mu.push_back(bn.mu);
    out.bn_omega.push_back(bn.omega);
    h = activation(bn.y, act);
  }
  out.logits = head.forward(h);
  return out;
}

std::vector<Var> ClassifierNet::params() const {
  std::vector<Var> p;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    p.push_back(blocks[i].w);
    p.push_back(blocks[i].b);
    p.push_back(norms[i].scale);
    p.push_back(norms[i].shift);
  }
  p.push_back(head.w);
  p.push_back(head.b);
  return p;
}

std::vector<std::pair<std::string, Matrix*>> ClassifierNet::named_tensors() {
  std::vector<std::pair<std::string, Matrix*>> out;
  append_block_tensors(out, blocks, norms, head);
  return out;
}

std::vector<std::pair<const Matrix*, const Matrix*>> ClassifierNet::bn_running() const {
  std::vector<std::pair<const Matrix*, const Matrix*>> out;
  for (const BatchNorm& n : norms) out.emplace_back(&n.running_mean, &n.running_var);
  return out;
}

void ClassifierNet::set_trainable(bool trainable) {
  for (const Var& p : params()) p->requires_grad = trainable;
}

ClassifierNet ClassifierNet::clone() const {
  ClassifierNet c;
  c.d_in = d_in;
  c.n_classes = n_classes;
  c.hidden = hidden;
  c.act = act;
  c.blocks = clone_blocks(blocks);
  c.norms = clone_norms(norms);
  c.head = {leaf(head.w->value, head.w->requires_grad), leaf(head.b->value, head.b->requires_grad)};
  return c;
}

std::string to_string(CondMode mode) {
  switch (mode) {
    case CondMode::kUncond: return "uncond";
    case CondMode::kSum: return "sum";
    case CondMode::kCat: return "cat";
  }
  return "uncond";
}

CondMode cond_mode_from_string(const std::string& s) {
  if (s == "uncond") return CondMode::kUncond;
  if (s == "sum") return CondMode::kSum;
  if (s == "cat") return CondMode::kCat;
  throw ConfigError("unknown conditioning mode '" + s + "' (expected uncond|sum|cat)");
}

Var EmbeddingTable::rows(const std::vector<int>& labels) const {
  std::vector<int> idx(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 1 || labels[i] > n_classes) {
      throw ConfigError("embedding lookup: label " + std::to_string(labels[i]) +
                        " outside [1," + std::to_string(n_classes) + "]");
    }
    idx[i] = labels[i] - 1;
  }
  return take_rows(table, idx);
}

EmbeddingTable EmbeddingTable::clone() const {
  return {leaf(table->value, table->requires_grad), n_classes, dim};
}

std::pair<GeneratorNet, std::optional<EmbeddingTable>> build_generator(
    int d_z, int d_e, const std::vector<int>& hidden, int d_out, CondMode mode,
    int n_classes, RngState rng) {
  if (hidden.empty()) throw ConfigError("build_generator: hidden layer list is empty");
  if (mode == CondMode::kSum && d_e != d_z) {
    throw ConfigError("build_generator: sum conditioning requires d_e == d_z (got d_e=" +
                      std::to_string(d_e) + ", d_z=" + std::to_string(d_z) + ")");
  }
  if (mode != CondMode::kUncond && n_classes < 2) {
    throw ConfigError("build_generator: conditional mode needs at least 2 classes");
  }

  GeneratorNet g;
  g.mode = mode;
  g.d_z = d_z;
  g.d_e = (mode == CondMode::kUncond) ? 0 : d_e;
  g.d_out = d_out;
  g.hidden = hidden;
  int width = (mode == CondMode::kCat) ? d_z + d_e : d_z;
  for (int h : hidden) {
    g.blocks.push_back(DenseLayer::init(width, h, rng));
    g.norms.push_back(BatchNorm::init(h));
    width = h;
  }
  g.head = DenseLayer::init(width, d_out, rng);

  std::optional<EmbeddingTable> table;
  if (mode != CondMode::kUncond) {
    // Rows start as unit Gaussians; their norms sit near sqrt(d_e), inside
    // the gamma*sqrt(d_e) ball the norm regularizer maintains.
    table = EmbeddingTable{leaf(rng.normal_matrix(n_classes, d_e), true), n_classes, d_e};
  }
  return {std::move(g), std::move(table)};
}

Var embed_input(const GeneratorNet& g, const Var& z, const Var& e) {
  if (z->cols() != g.d_z) {
    throw ShapeError("generator forward: expected noise width " + std::to_string(g.d_z) +
                     ", got " + std::to_string(z->cols()));
  }
  if (g.mode == CondMode::kUncond) {
    if (e) throw ConfigError("generator forward: embedding given in uncond mode");
    return z;
  }
  if (!e) throw ConfigError("generator forward: conditional mode needs embeddings");
  if (e->cols() != g.d_e || e->rows() != z->rows()) {
    throw ShapeError("generator forward: embedding batch must be " + std::to_string(z->rows()) +
                     "x" + std::to_string(g.d_e));
  }
  return g.mode == CondMode::kSum ? add(z, e) : hcat(z, e);
}

Var GeneratorNet::first_preactivation(const Var& z, const Var& e) const {
  return blocks.front().forward(embed_input(*this, z, e));
}

GeneratorNet::Out GeneratorNet::forward(const Var& z, const Var& e, BnMode mode_bn) {
  Var h = embed_input(*this, z, e);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    h = blocks[i].forward(h);
    h = activation(norms[i].forward(h, mode_bn).y, Act::kLeakyRelu, leaky_slope);
  }
  Out out;
  out.u = head.forward(h);
  out.x = sigmoid(out.u);
  return out;
}

GeneratorNet::Out generator_forward(GeneratorNet& g, const Var& z, const Var& e,
                                    BnMode mode_bn) {
  return g.forward(z, e, mode_bn);
}

std::vector<Var> GeneratorNet::params() const {
  std::vector<Var> p;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    p.push_back(blocks[i].w);
    p.push_back(blocks[i].b);
    p.push_back(norms[i].scale);
    p.push_back(norms[i].shift);
  }
  p.push_back(head.w);
  p.push_back(head.b);
  return p;
}

std::vector<std::pair<std::string, Matrix*>> GeneratorNet::named_tensors() {
  std::vector<std::pair<std::string, Matrix*>> out;
  append_block_tensors(out, blocks, norms, head);
  return out;
}

void GeneratorNet::set_trainable(bool trainable) {
  for (const Var& p : params()) p->requires_grad = trainable;
}

GeneratorNet GeneratorNet::clone() const {
  GeneratorNet c;
  c.mode = mode;
  c.d_z = d_z;
  c.d_e = d_e;
  c.d_out = d_out;
  c.hidden = hidden;
  c.leaky_slope = leaky_slope;
  c.blocks = clone_blocks(blocks);
  c.norms = clone_norms(norms);
  c.head = {leaf(head.w->value, head.w->requires_grad), leaf(head.b->value, head.b->requires_grad)};
  return c;
}

EmaState ema_init(const GeneratorNet& g, const std::optional<EmbeddingTable>& table,
                  double alpha) {
  if (alpha < 0.0 || alpha > 1.0) {
    throw ConfigError("ema_init: momentum must lie in [0,1]");
  }
  EmaState ema;
  ema.net = g.clone();
  if (table) ema.table = table->clone();
  ema.alpha = alpha;
  // The copy never trains directly; it only receives momentum updates.
  ema.net.set_trainable(false);
  if (ema.table) ema.table->table->requires_grad = false;
  return ema;
}

void ema_update(EmaState& ema, const GeneratorNet& g,
                const std::optional<EmbeddingTable>& table) {
  auto tracked = ema.net.named_tensors();
  auto source = const_cast<GeneratorNet&>(g).named_tensors();
  if (tracked.size() != source.size()) {
    throw ShapeError("ema_update: tensor count mismatch");
  }
  const double a = ema.alpha;
  for (std::size_t i = 0; i < tracked.size(); ++i) {
    Matrix& t = *tracked[i].second;
    const Matrix& s = *source[i].second;
    if (t.rows() != s.rows() || t.cols() != s.cols()) {
      throw ShapeError("ema_update: shape mismatch at '" + tracked[i].first + "'");
    }
    t = a * t + (1.0 - a) * s;
  }
  if (ema.table.has_value() != table.has_value()) {
    throw ShapeError("ema_update: embedding table presence mismatch");
  }
  if (ema.table) {
    Matrix& t = ema.table->table->value;
    const Matrix& s = table->table->value;
    if (t.rows() != s.rows() || t.cols() != s.cols()) {
      throw ShapeError("ema_update: embedding shape mismatch");
    }
    t = a * t + (1.0 - a) * s;
  }
}

}  // namespace mad

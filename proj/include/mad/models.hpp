#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mad/layers.hpp"

namespace mad {

/// MLP classifier: (dense -> batchnorm -> activation) blocks plus a dense
/// head of width C. Stands in for the teacher and the student.
struct ClassifierNet {
  int d_in = 0;
  int n_classes = 0;
  std::vector<int> hidden;
  Act act = Act::kRelu;
  std::vector<DenseLayer> blocks;
  std::vector<BatchNorm> norms;
  DenseLayer head;

  struct Out {
    Var logits;
    std::vector<Var> bn_mu;     // batch moments per BatchNorm layer
    std::vector<Var> bn_omega;
  };

  Out forward(const Var& x, BnMode mode);
  Var logits(const Var& x, BnMode mode) { return forward(x, mode).logits; }

  std::vector<Var> params() const;
  // Stable names for checkpointing and EMA pairing; includes running stats.
  std::vector<std::pair<std::string, Matrix*>> named_tensors();
  std::vector<std::pair<const Matrix*, const Matrix*>> bn_running() const;  // (mean,var) per layer
  void set_trainable(bool trainable);
  ClassifierNet clone() const;
};

ClassifierNet build_classifier(int d_in, const std::vector<int>& hidden, int n_classes,
                               RngState rng);

enum class CondMode { kUncond, kSum, kCat };

std::string to_string(CondMode mode);
CondMode cond_mode_from_string(const std::string& s);

/// C trainable class-embedding rows of dimension d_e.
struct EmbeddingTable {
  Var table;  // C x d_e
  int n_classes = 0;
  int dim = 0;

  // Gather rows for 1-based labels.
  Var rows(const std::vector<int>& labels) const;
  EmbeddingTable clone() const;
};

/// Generator producing output logits u; samples are x = sigmoid(u). The
/// conditioning mode fixes how class information enters the first layer:
/// uncond h = Wz + b, sum h = W(z + e_y) + b, cat h = Wz + U e_y + b.
struct GeneratorNet {
  CondMode mode = CondMode::kUncond;
  int d_z = 0;
  int d_e = 0;
  int d_out = 0;
  std::vector<int> hidden;
  double leaky_slope = 0.2;
  std::vector<DenseLayer> blocks;
  std::vector<BatchNorm> norms;
  DenseLayer head;

  struct Out {
    Var u;  // output logits
    Var x;  // sigmoid(u), in (0,1)
  };

  // e must be null exactly in uncond mode.
  Out forward(const Var& z, const Var& e, BnMode mode_bn);
  // First-layer preactivation, exposed for the conditioning identity checks.
  Var first_preactivation(const Var& z, const Var& e) const;

  std::vector<Var> params() const;
  std::vector<std::pair<std::string, Matrix*>> named_tensors();
  void set_trainable(bool trainable);
  GeneratorNet clone() const;
};

std::pair<GeneratorNet, std::optional<EmbeddingTable>> build_generator(
    int d_z, int d_e, const std::vector<int>& hidden, int d_out, CondMode mode,
    int n_classes, RngState rng);

Var embed_input(const GeneratorNet& g, const Var& z, const Var& e);

/// Spec-style wrapper around GeneratorNet::forward.
GeneratorNet::Out generator_forward(GeneratorNet& g, const Var& z, const Var& e,
                                    BnMode mode_bn = BnMode::kTrain);

/// Momentum copy of a generator (weights, BatchNorm running stats, and the
/// embedding table when conditional).
struct EmaState {
  GeneratorNet net;
  std::optional<EmbeddingTable> table;
  double alpha = 0.95;
};

EmaState ema_init(const GeneratorNet& g, const std::optional<EmbeddingTable>& table,
                  double alpha);
void ema_update(EmaState& ema, const GeneratorNet& g,
                const std::optional<EmbeddingTable>& table);

}  // namespace mad

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace mad {

/// Deterministic counter-based random stream. Every draw is a pure function
/// of (seed, stream id, draw counter), so identical runs replay bit-exactly
/// and independent consumers never perturb each other's sequences.
class RngState {
 public:
  // Named top-level streams. Substreams are derived with fork().
  enum Stream : std::uint64_t {
    kData = 1,
    kInit = 2,
    kNoise = 3,
    kLabels = 4,
    kProbe = 5,
    kBank = 6,
  };

  RngState(std::uint64_t seed, std::uint64_t stream);

  /// Independent child stream; child draws never collide with the parent's.
  RngState fork(std::uint64_t label) const;

  std::uint64_t next_u64();
  double uniform();                          // [0, 1)
  double uniform(double lo, double hi);
  double normal();                           // N(0,1), Box-Muller
  std::uint64_t uniform_int(std::uint64_t n);  // [0, n), unbiased
  int uniform_label(int n_classes);          // 1..C

  Eigen::MatrixXd normal_matrix(int rows, int cols);
  Eigen::MatrixXd uniform_matrix(int rows, int cols, double lo, double hi);
  std::vector<int> permutation(int n);       // Fisher-Yates

  std::uint64_t key() const { return key_; }

 private:
  explicit RngState(std::uint64_t key) : key_(key) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mad

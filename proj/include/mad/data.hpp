#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mad/rng.hpp"
#include "mad/tensor.hpp"

namespace mad {

/// Synthetic labelled dataset with inputs in [0,1], matching the sigmoid
/// output range of the generator. Labels are 1..C.
struct Dataset {
  Matrix inputs;            // N x d
  std::vector<int> labels;  // 1..C
  int n_classes = 0;
  std::string split = "full";
  // Per-dimension affine map applied to the raw samples: x01 = raw*a + b.
  Matrix affine_scale;   // 1 x d
  Matrix affine_offset;  // 1 x d

  Eigen::Index size() const { return inputs.rows(); }
  Eigen::Index dim() const { return inputs.cols(); }
};

/// C Gaussian clusters with centers on a deterministic lattice, rescaled
/// per-dimension into [0,1]. Balanced classes.
Dataset make_blobs(int n_classes, int per_class, int d_in, double spread, RngState rng);

/// Concentric 2-D annuli, one per class, with strictly increasing radii.
Dataset make_rings(int n_classes, int per_class, RngState rng);

/// Stratified split into disjoint (train, test) halves whose union is ds.
std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction, RngState rng);

void write_dataset_csv(const Dataset& ds, const std::string& path);
Dataset read_dataset_csv(const std::string& path);

}  // namespace mad

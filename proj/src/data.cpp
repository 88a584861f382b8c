#include "mad/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "mad/errors.hpp"

namespace mad {

namespace {

// Rescale each input dimension from its observed range onto [0,1] and record
// the map. Degenerate dimensions collapse onto 0.5.
void normalize_into_unit_box(Dataset& ds) {
  const Eigen::Index d = ds.inputs.cols();
  ds.affine_scale = Matrix::Ones(1, d);
  ds.affine_offset = Matrix::Zero(1, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double lo = ds.inputs.col(j).minCoeff();
    const double hi = ds.inputs.col(j).maxCoeff();
    double a = 0.0, b = 0.5;
    if (hi > lo) {
      a = 1.0 / (hi - lo);
      b = -lo * a;
    }
    ds.affine_scale(0, j) = a;
    ds.affine_offset(0, j) = b;
    ds.inputs.col(j) = (ds.inputs.col(j).array() * a + b).cwiseMax(0.0).cwiseMin(1.0);
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Dataset make_blobs(int n_classes, int per_class, int d_in, double spread, RngState rng) {
  if (n_classes < 2) throw ConfigError("make_blobs: need at least 2 classes");
  if (per_class < 2) throw ConfigError("make_blobs: need at least 2 samples per class");
  if (d_in < 1) throw ConfigError("make_blobs: input dimension must be positive");
  if (spread <= 0.0) throw ConfigError("make_blobs: spread must be positive");

  // Lattice with g cells per axis, g = ceil(C^(1/d)).
  int grid = 1;
  while (std::pow(static_cast<double>(grid), d_in) < static_cast<double>(n_classes)) ++grid;
  Matrix centers(n_classes, d_in);
  for (int c = 0; c < n_classes; ++c) {
    int rest = c;
    for (int j = 0; j < d_in; ++j) {
      centers(c, j) = (static_cast<double>(rest % grid) + 0.5) / static_cast<double>(grid);
      rest /= grid;
    }
  }

  Dataset ds;
  ds.n_classes = n_classes;
  ds.inputs.resize(static_cast<Eigen::Index>(n_classes) * per_class, d_in);
  ds.labels.resize(static_cast<std::size_t>(n_classes) * per_class);
  Eigen::Index row = 0;
  for (int c = 0; c < n_classes; ++c) {
    for (int k = 0; k < per_class; ++k, ++row) {
      for (int j = 0; j < d_in; ++j) {
        ds.inputs(row, j) = centers(c, j) + spread * rng.normal();
      }
      ds.labels[static_cast<std::size_t>(row)] = c + 1;
    }
  }
  normalize_into_unit_box(ds);
  return ds;
}

Dataset make_rings(int n_classes, int per_class, RngState rng) {
  if (n_classes < 2) throw ConfigError("make_rings: need at least 2 classes");
  if (per_class < 2) throw ConfigError("make_rings: need at least 2 samples per class");

  Dataset ds;
  ds.n_classes = n_classes;
  ds.inputs.resize(static_cast<Eigen::Index>(n_classes) * per_class, 2);
  ds.labels.resize(static_cast<std::size_t>(n_classes) * per_class);
  const double gap = 1.0 / static_cast<double>(n_classes + 1);
  const double sigma_r = 0.15 * gap;
  Eigen::Index row = 0;
  for (int c = 0; c < n_classes; ++c) {
    const double radius = gap * static_cast<double>(c + 1);
    for (int k = 0; k < per_class; ++k, ++row) {
      const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double r = radius + sigma_r * rng.normal();
      ds.inputs(row, 0) = r * std::cos(theta);
      ds.inputs(row, 1) = r * std::sin(theta);
      ds.labels[static_cast<std::size_t>(row)] = c + 1;
    }
  }
  normalize_into_unit_box(ds);
  return ds;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction, RngState rng) {
  if (test_fraction <= 0.0 || test_fraction >= 1.0) {
    throw ConfigError("split: test fraction must lie in (0,1)");
  }
  std::vector<std::vector<int>> by_class(static_cast<std::size_t>(ds.n_classes));
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    by_class[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)] - 1)].push_back(
        static_cast<int>(i));
  }
  std::vector<int> train_rows, test_rows;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& rows = by_class[c];
    if (rows.size() < 2) {
      throw ConfigError("split: class " + std::to_string(c + 1) + " has fewer than 2 samples");
    }
    std::vector<int> order = rng.permutation(static_cast<int>(rows.size()));
    long n_test = std::lround(test_fraction * static_cast<double>(rows.size()));
    n_test = std::clamp(n_test, 1L, static_cast<long>(rows.size()) - 1);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const int row = rows[static_cast<std::size_t>(order[k])];
      (static_cast<long>(k) < n_test ? test_rows : train_rows).push_back(row);
    }
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());

  auto take = [&](const std::vector<int>& rows, const std::string& tag) {
    Dataset out;
    out.n_classes = ds.n_classes;
    out.split = tag;
    out.affine_scale = ds.affine_scale;
    out.affine_offset = ds.affine_offset;
    out.inputs.resize(static_cast<Eigen::Index>(rows.size()), ds.dim());
    out.labels.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out.inputs.row(static_cast<Eigen::Index>(i)) = ds.inputs.row(rows[i]);
      out.labels[i] = ds.labels[static_cast<std::size_t>(rows[i])];
    }
    return out;
  };
  return {take(train_rows, "train"), take(test_rows, "test")};
}

void write_dataset_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw MissingArtifactError("cannot open '" + path + "' for writing");
  for (Eigen::Index j = 0; j < ds.dim(); ++j) out << "x" << (j + 1) << ",";
  out << "label\n";
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    for (Eigen::Index j = 0; j < ds.dim(); ++j) {
      out << format_double(ds.inputs(i, j)) << ",";
    }
    out << ds.labels[static_cast<std::size_t>(i)] << "\n";
  }
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("cannot open dataset '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("dataset '" + path + "' is empty");
  const auto n_cols = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ',') + 1);
  if (n_cols < 2) throw ConfigError("dataset '" + path + "' needs x columns and a label");
  const Eigen::Index d = n_cols - 1;

  std::vector<double> values;
  std::vector<int> labels;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    for (Eigen::Index j = 0; j < d; ++j) {
      if (!std::getline(ss, cell, ',')) throw ConfigError("dataset row too short in '" + path + "'");
      values.push_back(std::stod(cell));
    }
    if (!std::getline(ss, cell, ',')) throw ConfigError("dataset row misses label in '" + path + "'");
    labels.push_back(std::stoi(cell));
  }

  Dataset ds;
  ds.labels = std::move(labels);
  ds.inputs.resize(static_cast<Eigen::Index>(ds.labels.size()), d);
  for (Eigen::Index i = 0; i < ds.inputs.rows(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      ds.inputs(i, j) = values[static_cast<std::size_t>(i * d + j)];
    }
  }
  ds.n_classes = ds.labels.empty() ? 0 : *std::max_element(ds.labels.begin(), ds.labels.end());
  ds.affine_scale = Matrix::Ones(1, d);
  ds.affine_offset = Matrix::Zero(1, d);
  return ds;
}

}  // namespace mad

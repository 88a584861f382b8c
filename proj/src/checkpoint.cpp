#include "mad/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace mad {

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

namespace {

constexpr double kKindClassifier = 1.0;
constexpr double kKindGenerator = 2.0;

void put_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw CheckpointError(CkptError::kTruncated, "checkpoint truncated");
  return v;
}

Matrix row_vec(std::initializer_list<double> vals) {
  Matrix m(1, static_cast<Eigen::Index>(vals.size()));
  Eigen::Index j = 0;
  for (double v : vals) m(0, j++) = v;
  return m;
}

Matrix row_vec(const std::vector<double>& vals) {
  Matrix m(1, static_cast<Eigen::Index>(vals.size()));
  for (std::size_t j = 0; j < vals.size(); ++j) m(0, static_cast<Eigen::Index>(j)) = vals[j];
  return m;
}

const TensorRecord& expect(const RecordMap& records, const std::string& name) {
  auto it = records.find(name);
  if (it == records.end()) {
    throw CheckpointError(CkptError::kShapeMismatch, "checkpoint misses record '" + name + "'");
  }
  return it->second;
}

void assign(Matrix& dst, const RecordMap& records, const std::string& name) {
  const TensorRecord& rec = expect(records, name);
  if (rec.data.rows() != dst.rows() || rec.data.cols() != dst.cols()) {
    throw CheckpointError(CkptError::kShapeMismatch,
                          "record '" + name + "' has shape " + std::to_string(rec.data.rows()) +
                              "x" + std::to_string(rec.data.cols()) + ", expected " +
                              std::to_string(dst.rows()) + "x" + std::to_string(dst.cols()));
  }
  dst = rec.data;
}

void load_named(std::vector<std::pair<std::string, Matrix*>> tensors, const RecordMap& records) {
  for (auto& [name, mat] : tensors) assign(*mat, records, name);
}

std::vector<int> dims_as_ints(const Matrix& m) {
  std::vector<int> out;
  for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(static_cast<int>(m(0, j)));
  return out;
}

double meta_kind(const RecordMap& records) { return expect(records, "meta.kind").data(0, 0); }

}  // namespace

void write_records(const std::string& path, const RecordMap& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw MissingArtifactError("cannot open '" + path + "' for writing");
  out.write(kCkptMagic, sizeof(kCkptMagic));
  out.put(static_cast<char>(kCkptVersion));
  for (const auto& [name, rec] : records) {
    put_u64(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    if (rec.rank == 1) {
      put_u64(out, 1);
      put_u64(out, static_cast<std::uint64_t>(rec.data.size()));
    } else {
      put_u64(out, 2);
      put_u64(out, static_cast<std::uint64_t>(rec.data.rows()));
      put_u64(out, static_cast<std::uint64_t>(rec.data.cols()));
    }
    // Row-major on disk regardless of Eigen's storage order.
    for (Eigen::Index i = 0; i < rec.data.rows(); ++i) {
      for (Eigen::Index j = 0; j < rec.data.cols(); ++j) {
        const double v = rec.data(i, j);
        out.write(reinterpret_cast<const char*>(&v), sizeof(v));
      }
    }
  }
  if (!out) throw MissingArtifactError("short write to '" + path + "'");
}

RecordMap read_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("cannot open checkpoint '" + path + "'");
  char magic[sizeof(kCkptMagic)] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCkptMagic, sizeof(magic)) != 0) {
    throw CheckpointError(CkptError::kBadFormat, "'" + path + "' is not a MADCKPT file");
  }
  const int version = in.get();
  if (version == std::char_traits<char>::eof()) {
    throw CheckpointError(CkptError::kTruncated, "checkpoint truncated after magic");
  }
  if (version != kCkptVersion) {
    throw CheckpointError(CkptError::kVersionMismatch,
                          "checkpoint format version " + std::to_string(version) +
                              ", expected " + std::to_string(kCkptVersion));
  }

  RecordMap records;
  while (true) {
    std::uint64_t name_len = 0;
    in.read(reinterpret_cast<char*>(&name_len), sizeof(name_len));
    if (in.eof()) break;
    if (!in) throw CheckpointError(CkptError::kTruncated, "checkpoint truncated");
    if (name_len > 4096) {
      throw CheckpointError(CkptError::kBadFormat, "implausible record name length");
    }
    std::string name(name_len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(name_len));
    if (!in) throw CheckpointError(CkptError::kTruncated, "checkpoint truncated in name");

    const std::uint64_t rank = get_u64(in);
    if (rank < 1 || rank > 2) {
      throw CheckpointError(CkptError::kBadFormat, "unsupported tensor rank in '" + name + "'");
    }
    std::uint64_t rows = 1, cols = 0;
    if (rank == 1) {
      cols = get_u64(in);
    } else {
      rows = get_u64(in);
      cols = get_u64(in);
    }
    if (rows > (1u << 24) || cols > (1u << 24)) {
      throw CheckpointError(CkptError::kBadFormat, "implausible extents in '" + name + "'");
    }
    TensorRecord rec;
    rec.rank = rank;
    rec.data.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < rec.data.rows(); ++i) {
      for (Eigen::Index j = 0; j < rec.data.cols(); ++j) {
        double v = 0;
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        if (!in) {
          throw CheckpointError(CkptError::kTruncated, "checkpoint truncated in '" + name + "'");
        }
        rec.data(i, j) = v;
      }
    }
    records.emplace(std::move(name), std::move(rec));
  }
  return records;
}

void save_checkpoint(ClassifierNet& net, const std::string& path) {
  RecordMap records;
  records["meta.kind"] = {1, row_vec({kKindClassifier})};
  std::vector<double> dims{static_cast<double>(net.d_in)};
  for (int h : net.hidden) dims.push_back(static_cast<double>(h));
  dims.push_back(static_cast<double>(net.n_classes));
  records["meta.dims"] = {1, row_vec(dims)};
  records["meta.act"] = {1, row_vec({static_cast<double>(static_cast<int>(net.act))})};
  for (auto& [name, mat] : net.named_tensors()) records[name] = {2, *mat};
  write_records(path, records);
}

void save_checkpoint(GeneratorNet& net, const std::optional<EmbeddingTable>& table,
                     const std::string& path) {
  RecordMap records;
  records["meta.kind"] = {1, row_vec({kKindGenerator})};
  records["meta.mode"] = {1, row_vec({static_cast<double>(static_cast<int>(net.mode))})};
  std::vector<double> dims{static_cast<double>(net.d_z), static_cast<double>(net.d_e)};
  for (int h : net.hidden) dims.push_back(static_cast<double>(h));
  dims.push_back(static_cast<double>(net.d_out));
  records["meta.dims"] = {1, row_vec(dims)};
  records["meta.slope"] = {1, row_vec({net.leaky_slope})};
  for (auto& [name, mat] : net.named_tensors()) records[name] = {2, *mat};
  if (table) {
    records["emb.E"] = {2, table->table->value};
  }
  write_records(path, records);
}

void save_checkpoint(EmaState& ema, const std::string& path) {
  save_checkpoint(ema.net, ema.table, path);
}

ClassifierNet load_classifier(const std::string& path) {
  RecordMap records = read_records(path);
  if (meta_kind(records) != kKindClassifier) {
    throw CheckpointError(CkptError::kShapeMismatch,
                          "'" + path + "' does not hold a classifier");
  }
  std::vector<int> dims = dims_as_ints(expect(records, "meta.dims").data);
  if (dims.size() < 3) {
    throw CheckpointError(CkptError::kShapeMismatch, "classifier dims record too short");
  }
  const int d_in = dims.front();
  const int n_classes = dims.back();
  std::vector<int> hidden(dims.begin() + 1, dims.end() - 1);
  ClassifierNet net = build_classifier(d_in, hidden, n_classes, RngState(0, RngState::kInit));
  net.act = static_cast<Act>(static_cast<int>(expect(records, "meta.act").data(0, 0)));
  load_named(net.named_tensors(), records);
  return net;
}

std::pair<GeneratorNet, std::optional<EmbeddingTable>> load_generator(const std::string& path) {
  RecordMap records = read_records(path);
  if (meta_kind(records) != kKindGenerator) {
    throw CheckpointError(CkptError::kShapeMismatch, "'" + path + "' does not hold a generator");
  }
  std::vector<int> dims = dims_as_ints(expect(records, "meta.dims").data);
  if (dims.size() < 4) {
    throw CheckpointError(CkptError::kShapeMismatch, "generator dims record too short");
  }
  const int d_z = dims[0];
  const int d_e = dims[1];
  const int d_out = dims.back();
  std::vector<int> hidden(dims.begin() + 2, dims.end() - 1);
  const auto mode = static_cast<CondMode>(static_cast<int>(expect(records, "meta.mode").data(0, 0)));

  std::optional<EmbeddingTable> table;
  int n_classes = 2;
  if (mode != CondMode::kUncond) {
    const TensorRecord& emb = expect(records, "emb.E");
    n_classes = static_cast<int>(emb.data.rows());
  }
  auto [net, tbl] = build_generator(d_z, mode == CondMode::kUncond ? 0 : d_e, hidden, d_out,
                                    mode, n_classes, RngState(0, RngState::kInit));
  net.leaky_slope = expect(records, "meta.slope").data(0, 0);
  load_named(net.named_tensors(), records);
  if (tbl) {
    assign(tbl->table->value, records, "emb.E");
    table = std::move(tbl);
  }
  return {std::move(net), std::move(table)};
}

}  // namespace mad

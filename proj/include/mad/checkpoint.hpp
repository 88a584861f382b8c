#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>

#include "mad/models.hpp"

namespace mad {

// Versioned binary container: magic "MADCKPT", a format version byte, then
// repeated records of (name length u64, UTF-8 name, rank u64, extents u64...,
// values f64...), all little-endian, values in row-major order.
inline constexpr char kCkptMagic[7] = {'M', 'A', 'D', 'C', 'K', 'P', 'T'};
inline constexpr unsigned char kCkptVersion = 1;

struct TensorRecord {
  std::size_t rank = 2;
  Matrix data;  // rank 1 records are stored as 1 x n
};

using RecordMap = std::map<std::string, TensorRecord>;

void write_records(const std::string& path, const RecordMap& records);
RecordMap read_records(const std::string& path);

void save_checkpoint(ClassifierNet& net, const std::string& path);
void save_checkpoint(GeneratorNet& net, const std::optional<EmbeddingTable>& table,
                     const std::string& path);
void save_checkpoint(EmaState& ema, const std::string& path);

ClassifierNet load_classifier(const std::string& path);
std::pair<GeneratorNet, std::optional<EmbeddingTable>> load_generator(const std::string& path);

}  // namespace mad

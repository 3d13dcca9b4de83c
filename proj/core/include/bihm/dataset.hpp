#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "bihm/model.hpp"

namespace bihm {

/// Binary data matrix stored packed, one row per datapoint; each row takes
/// ceil(cols / 8) bytes with bits LSB-first (the BBM on-disk layout).
class BinaryDataset {
 public:
  BinaryDataset() = default;
  BinaryDataset(std::size_t rows, std::size_t cols, std::string name = {});

  /// Throws ArgumentError if `data` holds anything but 0 and 1.
  static BinaryDataset from_matrix(const Matrix& data, std::string name = {});

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t bytes_per_row() const { return (cols_ + 7) / 8; }
  const std::string& name() const { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }

  bool get(std::size_t r, std::size_t c) const {
    return (packed_[r * bytes_per_row() + c / 8] >> (c % 8)) & 1u;
  }
  void set(std::size_t r, std::size_t c, bool bit);

  Vector row(std::size_t r) const;
  Matrix to_matrix() const;

  const std::vector<std::uint8_t>& packed() const { return packed_; }
  std::vector<std::uint8_t>& packed() { return packed_; }

  /// Compares shape and bits; the name is ignored.
  bool operator==(const BinaryDataset& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && packed_ == other.packed_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::string name_;
  std::vector<std::uint8_t> packed_;
};

enum class DatasetFormat {
  kAmat,  // whitespace-separated 0/1, one row per line
  kCsv,   // comma-separated 0/1
  kBbm,   // packed binary, see save_dataset
};

/// .amat/.txt -> kAmat, .csv -> kCsv, .bbm -> kBbm; ArgumentError otherwise.
DatasetFormat dataset_format_from_path(const std::filesystem::path& path);
DatasetFormat parse_dataset_format(const std::string& name);

BinaryDataset load_dataset(const std::filesystem::path& path, DatasetFormat format);
BinaryDataset load_dataset(const std::filesystem::path& path);

/// Text parsing; `delimiter` == 0 means any whitespace. Blank lines are skipped.
BinaryDataset parse_text_dataset(std::istream& in, char delimiter);
BinaryDataset parse_bbm(const std::string& bytes);
std::string encode_bbm(const BinaryDataset& data);

/// BBM layout: "BIHMDATA", u32 LE version (1), u32 LE rows, u32 LE cols,
/// then rows * ceil(cols / 8) bytes, bits LSB-first, unused high bits zero.
void save_dataset(const BinaryDataset& data, const std::filesystem::path& path,
                  DatasetFormat format = DatasetFormat::kBbm);

}  // namespace bihm

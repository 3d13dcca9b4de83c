#include "bihm/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>
#include <sstream>

#include "bihm/errors.hpp"

namespace bihm {
namespace {

constexpr char kMagic[8] = {'B', 'I', 'H', 'M', 'D', 'A', 'T', 'A'};
constexpr std::size_t kHeaderBytes = 20;
constexpr std::uint32_t kVersion = 1;

std::uint32_t read_u32(const std::string& bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(bytes[offset + static_cast<std::size_t>(i)]);
  return v;
}

void write_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

BinaryDataset::BinaryDataset(std::size_t rows, std::size_t cols, std::string name)
    : rows_(rows), cols_(cols), name_(std::move(name)), packed_(rows * ((cols + 7) / 8), 0) {}

BinaryDataset BinaryDataset::from_matrix(const Matrix& data, std::string name) {
  require_binary(data, "dataset");
  BinaryDataset out(static_cast<std::size_t>(data.rows()), static_cast<std::size_t>(data.cols()), std::move(name));
  for (Index r = 0; r < data.rows(); ++r) {
    for (Index c = 0; c < data.cols(); ++c) {
      if (data(r, c) != 0.0) out.set(static_cast<std::size_t>(r), static_cast<std::size_t>(c), true);
    }
  }
  return out;
}

void BinaryDataset::set(std::size_t r, std::size_t c, bool bit) {
  auto& byte = packed_[r * bytes_per_row() + c / 8];
  const auto mask = static_cast<std::uint8_t>(1u << (c % 8));
  byte = bit ? static_cast<std::uint8_t>(byte | mask) : static_cast<std::uint8_t>(byte & ~mask);
}

Vector BinaryDataset::row(std::size_t r) const {
  Vector v(static_cast<Index>(cols_));
  for (std::size_t c = 0; c < cols_; ++c) v[static_cast<Index>(c)] = get(r, c) ? 1.0 : 0.0;
  return v;
}

Matrix BinaryDataset::to_matrix() const {
  Matrix m(static_cast<Index>(rows_), static_cast<Index>(cols_));
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) m(static_cast<Index>(r), static_cast<Index>(c)) = get(r, c) ? 1.0 : 0.0;
  }
  return m;
}

DatasetFormat parse_dataset_format(const std::string& name) {
  if (name == "amat" || name == "amat-text" || name == "txt") return DatasetFormat::kAmat;
  if (name == "csv") return DatasetFormat::kCsv;
  if (name == "bbm") return DatasetFormat::kBbm;
  throw ArgumentError("unknown dataset format '" + name + "'");
}

DatasetFormat dataset_format_from_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  if (!ext.empty()) ext.erase(0, 1);
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (ext.empty()) throw ArgumentError("cannot infer dataset format of " + path.string());
  return parse_dataset_format(ext);
}

BinaryDataset parse_text_dataset(std::istream& in, char delimiter) {
  std::vector<std::vector<bool>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields;
    if (delimiter == 0) {
      std::istringstream ss(line);
      std::string tok;
      while (ss >> tok) fields.push_back(tok);
    } else {
      std::size_t start = 0;
      while (true) {
        const std::size_t pos = line.find(delimiter, start);
        fields.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
        if (pos == std::string::npos) break;
        start = pos + 1;
      }
    }
    std::vector<bool> bits;
    bits.reserve(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (fields[i] == "0") {
        bits.push_back(false);
      } else if (fields[i] == "1") {
        bits.push_back(true);
      } else {
        throw DatasetFormatError("line " + std::to_string(line_no) + ", field " + std::to_string(i + 1) +
                                     ": expected 0 or 1, got '" + fields[i] + "'",
                                 line_no, 0);
      }
    }
    if (!rows.empty() && bits.size() != rows.front().size()) {
      throw DatasetFormatError("line " + std::to_string(line_no) + ": ragged row (" + std::to_string(bits.size()) +
                                   " values, expected " + std::to_string(rows.front().size()) + ")",
                               line_no, 0);
    }
    rows.push_back(std::move(bits));
  }
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  BinaryDataset out(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (rows[r][c]) out.set(r, c, true);
    }
  }
  return out;
}

std::string encode_bbm(const BinaryDataset& data) {
  if (data.rows() > 0xffffffffu || data.cols() > 0xffffffffu) throw ArgumentError("dataset too large for BBM");
  std::string out(kMagic, sizeof(kMagic));
  write_u32(out, kVersion);
  write_u32(out, static_cast<std::uint32_t>(data.rows()));
  write_u32(out, static_cast<std::uint32_t>(data.cols()));
  out.append(reinterpret_cast<const char*>(data.packed().data()), data.packed().size());
  return out;
}

BinaryDataset parse_bbm(const std::string& bytes) {
  if (bytes.size() < kHeaderBytes) {
    throw DatasetFormatError("truncated BBM header: " + std::to_string(bytes.size()) + " of " +
                                 std::to_string(kHeaderBytes) + " bytes",
                             0, bytes.size());
  }
  if (!std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    throw DatasetFormatError("bad magic: not a BBM dataset", 0, 0);
  }
  const std::uint32_t version = read_u32(bytes, 8);
  if (version != kVersion) {
    throw DatasetFormatError("unsupported BBM version " + std::to_string(version), 0, 8);
  }
  const std::uint64_t rows = read_u32(bytes, 12);
  const std::uint64_t cols = read_u32(bytes, 16);
  const std::uint64_t row_bytes = (cols + 7) / 8;
  const std::uint64_t expected = kHeaderBytes + rows * row_bytes;
  if (bytes.size() != expected) {
    throw DatasetFormatError("BBM payload size mismatch: expected " + std::to_string(expected) + " bytes, got " +
                                 std::to_string(bytes.size()),
                             0, std::min<std::uint64_t>(bytes.size(), expected));
  }
  BinaryDataset out(rows, cols);
  std::copy(bytes.begin() + kHeaderBytes, bytes.end(), reinterpret_cast<char*>(out.packed().data()));
  if (cols % 8 != 0) {
    const auto pad_mask = static_cast<std::uint8_t>(0xffu << (cols % 8));
    for (std::uint64_t r = 0; r < rows; ++r) {
      const std::uint64_t off = r * row_bytes + row_bytes - 1;
      if (out.packed()[off] & pad_mask) {
        throw DatasetFormatError("non-zero padding bits in row " + std::to_string(r), 0, kHeaderBytes + off);
      }
    }
  }
  return out;
}

BinaryDataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
  BinaryDataset data;
  if (format == DatasetFormat::kBbm) {
    data = parse_bbm(read_file(path));
  } else {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    data = parse_text_dataset(in, format == DatasetFormat::kCsv ? ',' : '\0');
  }
  data.set_name(path.stem().string());
  return data;
}

BinaryDataset load_dataset(const std::filesystem::path& path) {
  return load_dataset(path, dataset_format_from_path(path));
}

void save_dataset(const BinaryDataset& data, const std::filesystem::path& path, DatasetFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  if (format == DatasetFormat::kBbm) {
    const std::string bytes = encode_bbm(data);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  } else {
    const char sep = format == DatasetFormat::kCsv ? ',' : ' ';
    std::string line;
    for (std::size_t r = 0; r < data.rows(); ++r) {
      line.clear();
      for (std::size_t c = 0; c < data.cols(); ++c) {
        if (c > 0) line.push_back(sep);
        line.push_back(data.get(r, c) ? '1' : '0');
      }
      line.push_back('\n');
      out << line;
    }
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace bihm

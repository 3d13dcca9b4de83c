#include "bihm/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <iterator>

#include "bihm/errors.hpp"

namespace bihm {

const char* CheckpointError::kind() const noexcept {
  switch (reason_) {
    case Reason::kBadMagic:
      return "checkpoint_bad_magic";
    case Reason::kUnsupportedVersion:
      return "checkpoint_unsupported_version";
    case Reason::kTruncated:
      return "checkpoint_truncated";
    case Reason::kSizeMismatch:
      return "checkpoint_size_mismatch";
    case Reason::kBadMetadata:
      return "checkpoint_bad_metadata";
  }
  return "checkpoint";
}

namespace {

constexpr char kMagic[8] = {'B', 'I', 'H', 'M', 'M', 'O', 'D', 'L'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_f64(std::string& out, double d) {
  const auto bits = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(bytes_[pos_ + static_cast<std::size_t>(i)]);
    pos_ += 4;
    return v;
  }

  double f64() {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(bytes_[pos_ + static_cast<std::size_t>(i)]);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }

  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    const auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  void need(std::uint64_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw CheckpointError(CheckpointError::Reason::kTruncated,
                            std::string("truncated checkpoint while reading ") + what + ": expected at least " +
                                std::to_string(pos_ + n) + " bytes, got " + std::to_string(bytes_.size()));
    }
  }

  std::size_t pos() const { return pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string encode_metadata(const Metadata& metadata) {
  std::string out;
  for (const auto& [key, value] : metadata) {
    if (key.empty() || key.find_first_of("=\n") != std::string::npos || value.find('\n') != std::string::npos) {
      throw ArgumentError("checkpoint metadata: keys need no '=' or newline, values no newline ('" + key + "')");
    }
    out += key;
    out += '=';
    out += value;
    out += '\n';
  }
  return out;
}

Metadata decode_metadata(std::string_view text) {
  Metadata out;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) {
      throw CheckpointError(CheckpointError::Reason::kBadMetadata, "checkpoint metadata: missing final newline");
    }
    const auto line = text.substr(start, end - start);
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw CheckpointError(CheckpointError::Reason::kBadMetadata, "checkpoint metadata: malformed line");
    }
    out.emplace(std::string(line.substr(0, eq)), std::string(line.substr(eq + 1)));
    start = end + 1;
  }
  return out;
}

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > UINT64_MAX / a) {
    throw CheckpointError(CheckpointError::Reason::kSizeMismatch, "checkpoint layer sizes overflow");
  }
  return a * b;
}

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  if (b > UINT64_MAX - a) throw CheckpointError(CheckpointError::Reason::kSizeMismatch, "checkpoint layer sizes overflow");
  return a + b;
}

}  // namespace

std::string encode_checkpoint(const BihmModel& model, const Metadata& metadata) {
  model.validate();
  const std::string meta = encode_metadata(metadata);
  std::string out(kMagic, sizeof(kMagic));
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(model.depth()));
  for (const Index s : model.layer_sizes()) put_u32(out, static_cast<std::uint32_t>(s));
  put_u32(out, static_cast<std::uint32_t>(meta.size()));
  out += meta;
  const Vector params = flatten_parameters(model);
  out.reserve(out.size() + 8 * static_cast<std::size_t>(params.size()));
  for (Index i = 0; i < params.size(); ++i) put_f64(out, params[i]);
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  Reader in(bytes);
  in.need(sizeof(kMagic), "magic");
  if (bytes.substr(0, sizeof(kMagic)) != std::string_view(kMagic, sizeof(kMagic))) {
    throw CheckpointError(CheckpointError::Reason::kBadMagic, "bad magic: not a BiHM checkpoint");
  }
  in.take(sizeof(kMagic), "magic");
  const std::uint32_t version = in.u32("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError(CheckpointError::Reason::kUnsupportedVersion,
                          "unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t depth = in.u32("layer count");
  if (depth < 1) throw CheckpointError(CheckpointError::Reason::kSizeMismatch, "checkpoint has no latent layers");
  in.need(4ull * (static_cast<std::uint64_t>(depth) + 1), "layer sizes");
  std::vector<std::uint64_t> sizes;
  for (std::uint32_t i = 0; i <= depth; ++i) {
    const std::uint32_t s = in.u32("layer sizes");
    if (s < 1) throw CheckpointError(CheckpointError::Reason::kSizeMismatch, "checkpoint layer size is zero");
    sizes.push_back(s);
  }
  const std::uint32_t meta_len = in.u32("metadata length");
  const std::string_view meta = in.take(meta_len, "metadata");

  std::uint64_t params = sizes.back();
  for (std::size_t l = 1; l < sizes.size(); ++l) {
    const std::uint64_t per_level = checked_add(checked_mul(2, checked_mul(sizes[l - 1], sizes[l])), sizes[l - 1] + sizes[l]);
    params = checked_add(params, per_level);
  }
  const std::uint64_t expected = checked_add(in.pos(), checked_mul(params, 8));
  if (bytes.size() < expected) {
    throw CheckpointError(CheckpointError::Reason::kTruncated,
                          "truncated checkpoint: expected " + std::to_string(expected) + " bytes, got " +
                              std::to_string(bytes.size()));
  }
  if (bytes.size() > expected) {
    throw CheckpointError(CheckpointError::Reason::kSizeMismatch,
                          "checkpoint size mismatch: expected " + std::to_string(expected) + " bytes, got " +
                              std::to_string(bytes.size()));
  }

  Checkpoint ck;
  ck.metadata = decode_metadata(meta);
  std::vector<Index> layer_sizes(sizes.begin(), sizes.end());
  ck.model = BihmModel(std::move(layer_sizes));
  Vector flat(static_cast<Index>(params));
  for (Index i = 0; i < flat.size(); ++i) flat[i] = in.f64();
  assign_parameters(ck.model, flat);
  return ck;
}

void save_checkpoint(const BihmModel& model, const Metadata& metadata, const std::filesystem::path& path) {
  const std::string bytes = encode_checkpoint(model, metadata);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_checkpoint(bytes);
}

}  // namespace bihm

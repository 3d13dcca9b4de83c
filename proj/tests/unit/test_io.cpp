#include <gtest/gtest.h>

#include <clocale>
#include <cmath>
#include <cstring>
#include <set>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "bihm/checkpoint.hpp"
#include "bihm/dataset.hpp"
#include "bihm/errors.hpp"
#include "bihm/image.hpp"
#include "bihm/metrics.hpp"
#include "random_model.hpp"

namespace bihm {
namespace {

namespace fs = std::filesystem;

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("bihm_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  }
  static void dump(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }

  fs::path dir_;
};

Matrix random_binary(Index rows, Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.bernoulli(0.3) ? 1.0 : 0.0;
  return m;
}

// ---- datasets

TEST(Dataset, CsvExample) {
  std::istringstream in("0,1\n1,0");
  const Matrix m = parse_text_dataset(in, ',').to_matrix();
  Matrix expected(2, 2);
  expected << 0, 1, 1, 0;
  EXPECT_EQ(m, expected);
}

TEST(Dataset, AmatMnistRow) {
  std::string line;
  for (int i = 0; i < 784; ++i) line += (i % 3 == 0 ? "1 " : "0 ");
  line += "\n\n";
  std::istringstream in(line);
  const BinaryDataset d = parse_text_dataset(in, '\0');
  EXPECT_EQ(d.rows(), 1u);
  EXPECT_EQ(d.cols(), 784u);
  EXPECT_TRUE(d.get(0, 783 - 783 % 3));
  EXPECT_FALSE(d.get(0, 1));
}

TEST(Dataset, MalformedValueReportsLine) {
  std::istringstream in("0,1\n1,2\n");
  try {
    parse_text_dataset(in, ',');
    FAIL() << "expected a format error";
  } catch (const DatasetFormatError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(Dataset, FractionalValuesRejected) {
  std::istringstream in("0 0.5\n");
  EXPECT_THROW(parse_text_dataset(in, '\0'), DatasetFormatError);
}

TEST(Dataset, RaggedRowsReportLine) {
  std::istringstream in("0 1 1\n\n1 0\n");
  try {
    parse_text_dataset(in, '\0');
    FAIL() << "expected a format error";
  } catch (const DatasetFormatError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Dataset, FormatFromPath) {
  EXPECT_EQ(dataset_format_from_path("a/b.amat"), DatasetFormat::kAmat);
  EXPECT_EQ(dataset_format_from_path("b.CSV"), DatasetFormat::kCsv);
  EXPECT_EQ(dataset_format_from_path("b.bbm"), DatasetFormat::kBbm);
  EXPECT_THROW(dataset_format_from_path("b.npy"), ArgumentError);
}

TEST_F(TempDir, BbmRoundTripHundredMatrices) {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix m = random_binary(static_cast<Index>(rng.below(40)), 1 + static_cast<Index>(rng.below(30)), rng);
    const BinaryDataset d = BinaryDataset::from_matrix(m);
    save_dataset(d, path("d.bbm"));
    const BinaryDataset back = load_dataset(path("d.bbm"));
    ASSERT_TRUE(back == d);
    ASSERT_EQ(back.to_matrix(), m);
  }
}

TEST_F(TempDir, TextRoundTrips) {
  Rng rng(2);
  const BinaryDataset d = BinaryDataset::from_matrix(random_binary(7, 13, rng));
  save_dataset(d, path("d.csv"), DatasetFormat::kCsv);
  save_dataset(d, path("d.amat"), DatasetFormat::kAmat);
  EXPECT_TRUE(load_dataset(path("d.csv")) == d);
  EXPECT_TRUE(load_dataset(path("d.amat")) == d);
  EXPECT_EQ(load_dataset(path("d.csv")).name(), "d");
}

TEST(Dataset, BbmHeaderLayout) {
  Matrix m(1, 10);
  m << 1, 0, 0, 0, 0, 0, 0, 1, 0, 1;
  const std::string bytes = encode_bbm(BinaryDataset::from_matrix(m));
  ASSERT_EQ(bytes.size(), 20u + 2u);
  EXPECT_EQ(bytes.substr(0, 8), "BIHMDATA");
  EXPECT_EQ(bytes[8], 1);
  EXPECT_EQ(bytes[12], 1);
  EXPECT_EQ(bytes[16], 10);
  EXPECT_EQ(static_cast<unsigned char>(bytes[20]), 0x81);
  EXPECT_EQ(static_cast<unsigned char>(bytes[21]), 0x02);
}

TEST(Dataset, BbmCorruption) {
  Rng rng(3);
  const std::string good = encode_bbm(BinaryDataset::from_matrix(random_binary(5, 11, rng)));
  std::string bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_THROW(parse_bbm(bad_magic), DatasetFormatError);
  std::string bad_version = good;
  bad_version[8] = 2;
  EXPECT_THROW(parse_bbm(bad_version), DatasetFormatError);
  EXPECT_THROW(parse_bbm(good.substr(0, 10)), DatasetFormatError);
  EXPECT_THROW(parse_bbm(good.substr(0, good.size() - 1)), DatasetFormatError);
  EXPECT_THROW(parse_bbm(good + '\0'), DatasetFormatError);
  std::string pad = good;
  pad[21] = static_cast<char>(pad[21] | 0x80);
  try {
    parse_bbm(pad);
    FAIL() << "expected a format error";
  } catch (const DatasetFormatError& e) {
    EXPECT_EQ(e.offset(), 21u);
  }
  // a huge row count in the header must fail on size, not allocate
  std::string huge = good;
  huge[15] = static_cast<char>(0x7f);
  EXPECT_THROW(parse_bbm(huge), DatasetFormatError);
}

TEST_F(TempDir, MissingFileIsIoError) {
  EXPECT_THROW(load_dataset(path("missing.bbm")), IoError);
  EXPECT_THROW(load_checkpoint(path("missing.ckpt")), IoError);
}

// ---- checkpoints

TEST_F(TempDir, CheckpointRoundTripIsBitExact) {
  Rng rng(4);
  for (const std::vector<Index>& sizes : {std::vector<Index>{5, 3}, std::vector<Index>{7, 4, 3, 2}}) {
    const BihmModel m = testing::random_model(sizes, rng);
    const Metadata meta = {{"epoch", "12"}, {"note", "seeded = yes"}};
    save_checkpoint(m, meta, path("m.ckpt"));
    const Checkpoint ck = load_checkpoint(path("m.ckpt"));
    EXPECT_TRUE(ck.model == m);
    EXPECT_EQ(ck.metadata, meta);
    EXPECT_EQ(encode_checkpoint(ck.model, ck.metadata), slurp(path("m.ckpt")));
  }
}

TEST(Checkpoint, Layout) {
  BihmModel m({2, 1});
  m.prior().biases[0] = 1.5;
  const std::string bytes = encode_checkpoint(m, {{"k", "v"}});
  EXPECT_EQ(bytes.substr(0, 8), "BIHMMODL");
  EXPECT_EQ(bytes[8], 1);   // version
  EXPECT_EQ(bytes[12], 1);  // L
  EXPECT_EQ(bytes[16], 2);
  EXPECT_EQ(bytes[20], 1);
  EXPECT_EQ(bytes[24], 4);  // metadata length
  EXPECT_EQ(bytes.substr(28, 4), "k=v\n");
  double first = 0.0;
  std::memcpy(&first, bytes.data() + 32, 8);
  EXPECT_EQ(first, 1.5);
  EXPECT_EQ(bytes.size(), 32u + 8u * static_cast<std::size_t>(m.num_parameters()));
}

CheckpointError::Reason reason_of(const std::string& bytes) {
  try {
    decode_checkpoint(bytes);
  } catch (const CheckpointError& e) {
    return e.reason();
  }
  ADD_FAILURE() << "decode succeeded";
  return CheckpointError::Reason::kBadMetadata;
}

TEST(Checkpoint, CorruptionCorpus) {
  using R = CheckpointError::Reason;
  Rng rng(5);
  const std::string good = encode_checkpoint(testing::random_model({4, 3, 2}, rng), {{"a", "1"}});

  std::string magic = good;
  magic[3] ^= 0x20;
  EXPECT_EQ(reason_of(magic), R::kBadMagic);
  EXPECT_EQ(reason_of("BIH"), R::kTruncated);

  std::string version = good;
  version[8] = 9;
  EXPECT_EQ(reason_of(version), R::kUnsupportedVersion);

  for (std::size_t cut : {std::size_t{10}, std::size_t{20}, std::size_t{30}, good.size() - 1}) {
    EXPECT_EQ(reason_of(good.substr(0, cut)), R::kTruncated) << cut;
  }
  EXPECT_EQ(reason_of(good + "x"), R::kSizeMismatch);

  std::string zero_layer = good;
  zero_layer[20] = 0;
  EXPECT_EQ(reason_of(zero_layer), R::kSizeMismatch);

  std::string no_layers = good;
  no_layers[12] = 0;
  EXPECT_EQ(reason_of(no_layers), R::kSizeMismatch);

  std::string huge = good;
  huge[19] = static_cast<char>(0x7f);  // visible size ~ 2^31
  const R r = reason_of(huge);
  EXPECT_TRUE(r == R::kTruncated || r == R::kSizeMismatch);

  std::string meta = good;
  const std::size_t meta_at = 8 + 4 + 4 + 3 * 4 + 4;
  meta[meta_at + 1] = 'x';  // "a=1\n" -> "ax1\n"
  EXPECT_EQ(reason_of(meta), R::kBadMetadata);
}

TEST(Checkpoint, TruncationNamesByteCounts) {
  Rng rng(6);
  const std::string good = encode_checkpoint(testing::random_model({3, 2}, rng), {});
  try {
    decode_checkpoint(good.substr(0, good.size() - 5));
    FAIL();
  } catch (const CheckpointError& e) {
    EXPECT_EQ(std::string(e.kind()), "checkpoint_truncated");
    const std::string msg = e.what();
    EXPECT_NE(msg.find(std::to_string(good.size())), std::string::npos) << msg;
    EXPECT_NE(msg.find(std::to_string(good.size() - 5)), std::string::npos) << msg;
  }
}

TEST(Checkpoint, ErrorKindsAreDistinct) {
  using R = CheckpointError::Reason;
  std::set<std::string> kinds;
  for (R r : {R::kBadMagic, R::kUnsupportedVersion, R::kTruncated, R::kSizeMismatch, R::kBadMetadata}) {
    kinds.insert(CheckpointError(r, "x").kind());
  }
  EXPECT_EQ(kinds.size(), 5u);
}

TEST(Checkpoint, MetadataValidation) {
  const BihmModel m({2, 1});
  EXPECT_THROW(encode_checkpoint(m, {{"a=b", "1"}}), ArgumentError);
  EXPECT_THROW(encode_checkpoint(m, {{"a", "line\nbreak"}}), ArgumentError);
}

// ---- images

// Minimal independent PGM parser: header tokens then raw bytes.
std::vector<unsigned char> parse_pgm_bytes(const std::string& bytes, int& w, int& h) {
  std::istringstream in(bytes);
  std::string magic;
  int maxval = 0;
  in >> magic >> w >> h >> maxval;
  in.get();
  EXPECT_EQ(magic, "P5");
  EXPECT_EQ(maxval, 255);
  std::vector<unsigned char> px(static_cast<std::size_t>(w * h));
  in.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(px.size()));
  return px;
}

TEST(Pgm, HalfGreyRoundsUp) {
  const std::vector<double> img(12, 0.5);
  int w = 0;
  int h = 0;
  const auto px = parse_pgm_bytes(encode_pgm(img, 4, 3), w, h);
  EXPECT_EQ(w, 4);
  EXPECT_EQ(h, 3);
  for (unsigned char p : px) EXPECT_EQ(p, 128);
}

TEST(Pgm, SingleWhitePixel) {
  const std::vector<double> img = {1.0};
  EXPECT_EQ(encode_pgm(img, 1, 1), std::string("P5\n1 1\n255\n") + static_cast<char>(255));
}

TEST(Pgm, Errors) {
  const std::vector<double> img(6, 0.2);
  EXPECT_THROW(encode_pgm(img, 4, 2), ShapeError);
  const std::vector<double> out_of_range = {0.0, 1.5};
  EXPECT_THROW(encode_pgm(out_of_range, 2, 1), ArgumentError);
  const std::vector<double> nan = {0.0, std::nan("")};
  EXPECT_THROW(encode_pgm(nan, 2, 1), ArgumentError);
}

TEST_F(TempDir, PgmRoundTrip) {
  Rng rng(7);
  std::vector<double> img(28 * 28);
  for (double& v : img) v = rng.uniform();
  write_pgm(img, 28, 28, path("a.pgm"));
  int w = 0;
  int h = 0;
  const auto independent = parse_pgm_bytes(slurp(path("a.pgm")), w, h);
  const GrayImage ours = read_pgm(path("a.pgm"));
  ASSERT_EQ(ours.width, 28);
  ASSERT_EQ(ours.height, 28);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const auto expected = static_cast<unsigned char>(std::floor(255.0 * img[i] + 0.5));
    EXPECT_EQ(independent[i], expected);
    EXPECT_EQ(ours.pixels[i], expected);
  }
}

// ---- metrics

TEST_F(TempDir, MetricsHeaderWrittenOnce) {
  EpochMetrics row;
  row.epoch = 1;
  row.updates = 50;
  row.train_log_ptilde = -12.3456789012;
  row.seconds = 0.5;
  append_metrics(path("m.csv"), row);
  row.epoch = 2;
  row.valid_log_ptilde = -13.0;
  row.two_log_z = -0.2;
  row.ess_percent = 42.0;
  append_metrics(path("m.csv"), row);
  const std::string text = slurp(path("m.csv"));
  EXPECT_EQ(text, std::string(kMetricsHeader) + "\n" + "1,50,-12.3456789,,,,0.5\n" +
                      "2,50,-12.3456789,-13,-0.2,42,0.5\n");
}

TEST_F(TempDir, MetricsIntoEmptyFileGetsHeader) {
  dump(path("e.csv"), "");
  append_metrics(path("e.csv"), EpochMetrics{});
  EXPECT_EQ(slurp(path("e.csv")).substr(0, kMetricsHeader.size()), kMetricsHeader);
}

TEST(Metrics, NumberFormatIgnoresLocale) {
  const char* old = std::setlocale(LC_NUMERIC, nullptr);
  const std::string saved = old ? old : "C";
  if (std::setlocale(LC_NUMERIC, "de_DE.UTF-8") == nullptr) std::setlocale(LC_NUMERIC, "C");
  EXPECT_EQ(format_number(3.14159265358979), "3.14159265");
  EXPECT_EQ(format_number(-1234567.891), "-1234567.89");
  EXPECT_EQ(format_number(1e-12), "1e-12");
  std::setlocale(LC_NUMERIC, saved.c_str());
}

}  // namespace
}  // namespace bihm

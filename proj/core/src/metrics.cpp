#include "bihm/metrics.hpp"

#include <charconv>
#include <fstream>

#include "bihm/errors.hpp"

namespace bihm {

std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 9);
  return std::string(buf, res.ptr);
}

std::string format_metrics_row(const EpochMetrics& row) {
  auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
  return std::to_string(row.epoch) + "," + std::to_string(row.updates) + "," + format_number(row.train_log_ptilde) +
         "," + opt(row.valid_log_ptilde) + "," + opt(row.two_log_z) + "," + opt(row.ess_percent) + "," +
         format_number(row.seconds);
}

void append_metrics(const std::filesystem::path& path, const EpochMetrics& row) {
  std::error_code ec;
  const bool need_header = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot open metrics file " + path.string());
  if (need_header) out << kMetricsHeader << '\n';
  out << format_metrics_row(row) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace bihm

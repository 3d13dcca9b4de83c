#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "bihm/training.hpp"

namespace bihm {

inline constexpr std::string_view kMetricsHeader =
    "epoch,updates,train_logptilde,valid_logptilde,two_log_z,ess_pct,seconds";

/// 9 significant digits, '.' separator, independent of the global locale.
std::string format_number(double value);

/// One CSV line (no newline). Missing optional values are empty fields.
std::string format_metrics_row(const EpochMetrics& row);

/// Appends a row, writing the header first when the file is missing or empty.
void append_metrics(const std::filesystem::path& path, const EpochMetrics& row);

}  // namespace bihm

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "isea/linalg.hpp"

namespace isea {

/// printf("%.*g") with `significant` digits; locale independent.
std::string format_number(double value, int significant);

struct MetricsRecord {
  double sweep_value = 0.0;
  double acc_mean = 0.0;
  double acc_std = 0.0;
  double mse_mean = 0.0;
  double md_mean = 0.0;
  /// L x L counts, rows = true class, columns = predicted class.
  std::vector<std::vector<std::size_t>> confusion;
  std::size_t excluded_trials = 0;
};

inline constexpr int kMetricsDigits = 9;
inline constexpr const char* kMetricsHeader = "sweep_value,acc_mean,acc_std,mse_mean,md_mean";

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRecord>& records);
/// Rows `sweep_value,true,pred,count` with 1-based labels.
void write_confusion_csv(std::ostream& out, const std::vector<MetricsRecord>& records);

/// Writes the metrics and confusion files. Throws IoError naming the path.
void export_records(const std::vector<MetricsRecord>& records, const std::filesystem::path& path,
                    const std::filesystem::path& confusion_path);

/// Parses files written by write_metrics_csv / write_confusion_csv.
std::vector<MetricsRecord> read_metrics_csv(std::istream& metrics, std::istream* confusion);

/// Plain CSV table helper for the auxiliary outputs.
void write_table_csv(std::ostream& out, const std::vector<std::string>& header,
                     const std::vector<Vector>& rows, int digits = kMetricsDigits);

/// Writes `text` to `path`, creating parent directories. Throws IoError.
void write_file(const std::filesystem::path& path, const std::string& text);
std::string read_file(const std::filesystem::path& path);

}  // namespace isea

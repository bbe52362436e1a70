#include "isea/export.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "isea/errors.hpp"

namespace isea {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

double parse_double(const std::string& s) {
  std::istringstream in(s);
  in.imbue(std::locale::classic());
  double v = 0.0;
  in >> v;
  if (in.fail() || !in.eof()) {
    // Streams do not read "nan"/"inf"; fall back to strtod for those.
    char* end = nullptr;
    v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) {
      throw ValidationError("not a number: '" + s + "'");
    }
  }
  return v;
}

}  // namespace

std::string format_number(double value, int significant) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*g", significant, value);
  return buffer;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRecord>& records) {
  out << kMetricsHeader << '\n';
  for (const auto& r : records) {
    out << format_number(r.sweep_value, kMetricsDigits) << ','
        << format_number(r.acc_mean, kMetricsDigits) << ','
        << format_number(r.acc_std, kMetricsDigits) << ','
        << format_number(r.mse_mean, kMetricsDigits) << ','
        << format_number(r.md_mean, kMetricsDigits) << '\n';
  }
}

void write_confusion_csv(std::ostream& out, const std::vector<MetricsRecord>& records) {
  out << "sweep_value,true,pred,count\n";
  for (const auto& r : records) {
    for (std::size_t i = 0; i < r.confusion.size(); ++i) {
      for (std::size_t j = 0; j < r.confusion[i].size(); ++j) {
        out << format_number(r.sweep_value, kMetricsDigits) << ',' << (i + 1) << ',' << (j + 1)
            << ',' << r.confusion[i][j] << '\n';
      }
    }
  }
}

void export_records(const std::vector<MetricsRecord>& records, const std::filesystem::path& path,
                    const std::filesystem::path& confusion_path) {
  std::ostringstream metrics;
  write_metrics_csv(metrics, records);
  write_file(path, metrics.str());
  std::ostringstream confusion;
  write_confusion_csv(confusion, records);
  write_file(confusion_path, confusion.str());
}

std::vector<MetricsRecord> read_metrics_csv(std::istream& metrics, std::istream* confusion) {
  std::string line;
  if (!std::getline(metrics, line) || line != kMetricsHeader) {
    throw ValidationError(std::string("metrics CSV must start with header '") + kMetricsHeader +
                          "'");
  }
  std::vector<MetricsRecord> records;
  while (std::getline(metrics, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 5) throw ValidationError("bad metrics row: '" + line + "'");
    MetricsRecord r;
    r.sweep_value = parse_double(f[0]);
    r.acc_mean = parse_double(f[1]);
    r.acc_std = parse_double(f[2]);
    r.mse_mean = parse_double(f[3]);
    r.md_mean = parse_double(f[4]);
    records.push_back(std::move(r));
  }
  if (confusion == nullptr) return records;

  if (!std::getline(*confusion, line) || line != "sweep_value,true,pred,count") {
    throw ValidationError("confusion CSV must start with header 'sweep_value,true,pred,count'");
  }
  // Rows appear in record order; a record's block starts when the sweep
  // value changes or the (1, 1) cell reappears.
  std::size_t current = 0;
  bool started = false;
  while (std::getline(*confusion, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 4) throw ValidationError("bad confusion row: '" + line + "'");
    const auto t = static_cast<std::size_t>(parse_double(f[1]));
    const auto p = static_cast<std::size_t>(parse_double(f[2]));
    const auto count = static_cast<std::size_t>(parse_double(f[3]));
    if (t == 0 || p == 0) throw ValidationError("confusion labels are 1-based");
    if (t == 1 && p == 1) {
      if (started) ++current;
      started = true;
    }
    if (current >= records.size()) throw ValidationError("confusion CSV has extra records");
    auto& m = records[current].confusion;
    if (m.size() < t) m.resize(t);
    for (auto& row : m) {
      if (row.size() < p) row.resize(p, 0);
    }
    m[t - 1][p - 1] = count;
  }
  for (auto& r : records) {
    std::size_t width = 0;
    for (const auto& row : r.confusion) width = std::max(width, row.size());
    width = std::max(width, r.confusion.size());
    r.confusion.resize(width);
    for (auto& row : r.confusion) row.resize(width, 0);
  }
  return records;
}

void write_table_csv(std::ostream& out, const std::vector<std::string>& header,
                     const std::vector<Vector>& rows, int digits) {
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << (i ? "," : "") << format_number(row[i], digits);
    }
    out << '\n';
  }
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.close();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace isea

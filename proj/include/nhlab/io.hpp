#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace nhlab {

/// Shortest decimal form that round-trips a double; "nan", "inf", "-inf"
/// for non-finite values.
std::string format_double(double v);

using Cell = std::variant<double, long long, std::string>;

/// Column-named records serializable as CSV or as a JSON array of objects.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
  [[nodiscard]] std::string to_csv() const;
  [[nodiscard]] nlohmann::ordered_json to_json() const;
};

enum class TableFormat { csv, json };

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

struct FileRecord {
  std::string name;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

/// Files written into one output directory, listed in manifest.json on
/// finish(). Throws std::runtime_error on I/O failure.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  const std::vector<FileRecord>& files() const { return files_; }

  void write_text(const std::string& name, const std::string& content);
  void write_json(const std::string& name, const nlohmann::ordered_json& j);
  /// Writes `stem`.csv or `stem`.json.
  void write_table(const std::string& stem, const Table& t, TableFormat fmt);

  /// Writes manifest.json (tool version, UTC timestamp, configuration, files).
  void finish(const std::string& tool_version, const nlohmann::ordered_json& config);

 private:
  std::filesystem::path dir_;
  std::vector<FileRecord> files_;
};

}  // namespace nhlab

#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace somn {

// Round-trip formatting for doubles ("%.17g"); deterministic for a given
// binary, which keeps emitted reports byte-identical across re-runs.
std::string fmt_double(double value);
// Compact formatting for human-facing summaries ("%.6g").
std::string fmt_double6(double value);

// Minimal CSV emitter. Fields are written verbatim; our data never needs
// quoting (no commas or newlines inside fields).
class CsvWriter {
 public:
  // "# key=value" header lines, used to pin config hash / seed / version.
  void comment(std::string_view key, std::string_view value);
  void row(std::initializer_list<std::string_view> fields);
  void row(const std::vector<std::string>& fields);

  const std::string& str() const { return buf_; }
  void write_file(const std::filesystem::path& path) const;

 private:
  std::string buf_;
};

// Splits CSV text into rows of fields (plain fields, no quoting). Trailing
// '\r' is stripped; empty lines are skipped.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);
std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);
void write_binary_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace somn

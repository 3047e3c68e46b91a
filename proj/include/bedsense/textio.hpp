#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace bedsense::textio {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
void append_double(std::string& out, double value);

/// Strict parse: the whole field must be consumed. Returns false otherwise.
bool parse_double(std::string_view text, double& out);
bool parse_int(std::string_view text, long long& out);

/// Splits on commas. No quoting; callers reject fields containing commas.
std::vector<std::string_view> split_csv_line(std::string_view line);

std::string read_file(const std::filesystem::path& path);

/// Writes to a temporary sibling, then renames over path.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Iterates lines, stripping a trailing '\r'. Line numbers start at 1.
class LineReader {
 public:
  explicit LineReader(std::string_view text) : text_(text) {}
  bool next(std::string_view& line);
  std::size_t line_number() const { return line_number_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_number_ = 0;
};

}  // namespace bedsense::textio

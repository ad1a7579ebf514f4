#pragma once

#include <fstream>
#include <istream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fpscan::pipeline {

/// kNames: one hostname per line. kRanked: "rank,domain" lines (Tranco
/// style). kAuto: ranked when a line starts with digits followed by a comma.
enum class InputFormat { kNames, kRanked, kAuto };

std::optional<InputFormat> input_format_from_string(std::string_view s);

class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Yields raw names in input order. Line terminators (LF, CRLF, lone CR)
/// and surrounding whitespace are stripped; blank lines and '#' comments
/// are skipped.
class NameReader {
 public:
  NameReader(std::istream& in, InputFormat format);
  /// Opens a file, or standard input for "-". Throws IngestError.
  static std::unique_ptr<NameReader> open(const std::string& path, InputFormat format);

  std::optional<std::string> next();
  std::size_t line_number() const { return line_no_; }

 private:
  bool read_line(std::string& line);

  std::unique_ptr<std::ifstream> owned_;
  std::istream* in_;
  InputFormat format_;
  std::size_t line_no_ = 0;
};

/// Strips the rank column from a ranked-list line; the text unchanged when
/// it has none.
std::string strip_rank(std::string_view line);

}  // namespace fpscan::pipeline

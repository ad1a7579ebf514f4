#include "fpscan/pipeline/ingest.hpp"

#include <iostream>

namespace fpscan::pipeline {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool has_rank(std::string_view line) {
  const auto comma = line.find(',');
  if (comma == 0 || comma == std::string_view::npos) return false;
  for (char c : line.substr(0, comma)) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

}  // namespace

std::optional<InputFormat> input_format_from_string(std::string_view s) {
  if (s == "names") return InputFormat::kNames;
  if (s == "ranked") return InputFormat::kRanked;
  if (s == "auto") return InputFormat::kAuto;
  return std::nullopt;
}

std::string strip_rank(std::string_view line) {
  const auto comma = line.find(',');
  if (comma == std::string_view::npos) return std::string(line);
  return std::string(trim(line.substr(comma + 1)));
}

NameReader::NameReader(std::istream& in, InputFormat format) : in_(&in), format_(format) {}

std::unique_ptr<NameReader> NameReader::open(const std::string& path, InputFormat format) {
  if (path == "-") return std::make_unique<NameReader>(std::cin, format);
  auto file = std::make_unique<std::ifstream>(path, std::ios::binary);
  if (!*file) throw IngestError("cannot open input '" + path + "'");
  auto reader = std::make_unique<NameReader>(*file, format);
  reader->owned_ = std::move(file);
  return reader;
}

bool NameReader::read_line(std::string& line) {
  line.clear();
  int c;
  bool any = false;
  while ((c = in_->get()) != std::char_traits<char>::eof()) {
    any = true;
    if (c == '\n') break;
    if (c == '\r') {
      if (in_->peek() == '\n') in_->get();
      break;
    }
    line.push_back(static_cast<char>(c));
  }
  if (in_->bad()) throw IngestError("read error on input");
  if (any) ++line_no_;
  return any;
}

std::optional<std::string> NameReader::next() {
  std::string line;
  while (read_line(line)) {
    const std::string_view text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    switch (format_) {
      case InputFormat::kNames:
        return std::string(text);
      case InputFormat::kRanked: {
        if (text.find(',') == std::string_view::npos) {
          throw IngestError("line " + std::to_string(line_no_) + ": expected 'rank,domain'");
        }
        return strip_rank(text);
      }
      case InputFormat::kAuto:
        return has_rank(text) ? strip_rank(text) : std::string(text);
    }
  }
  return std::nullopt;
}

}  // namespace fpscan::pipeline

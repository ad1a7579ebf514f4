#include "fpscan/pipeline/checkpoint.hpp"

#include <filesystem>
#include <fstream>
#include <system_error>

#include "fpscan/pipeline/result.hpp"

namespace fpscan::pipeline {

ResumeState load_checkpoint(const std::string& path) {
  ResumeState state;
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return state;

  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint log '" + path + "'");
  std::size_t good_end = 0;
  std::size_t pos = 0;
  std::string line;
  while (std::getline(in, line)) {
    const bool terminated = !in.eof();
    const std::size_t next = pos + line.size() + (terminated ? 1 : 0);
    if (!terminated) break;  // no newline: interrupted write
    try {
      const DomainScanResult r = parse_json_line(line);
      state.inputs.insert(r.input);
      if (!r.domain.empty()) state.domains.insert(r.domain);
      if (r.registrable_domain) state.registrables.insert(*r.registrable_domain);
      ++state.lines;
    } catch (const SchemaError&) {
      break;
    }
    good_end = next;
    pos = next;
  }
  in.close();

  const auto size = std::filesystem::file_size(path);
  if (size > good_end) {
    state.truncated_bytes = size - good_end;
    std::filesystem::resize_file(path, good_end);
  }
  return state;
}

}  // namespace fpscan::pipeline

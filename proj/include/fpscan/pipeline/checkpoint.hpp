#pragma once

#include <cstddef>
#include <string>
#include <unordered_set>

namespace fpscan::pipeline {

/// What an existing result log already covers.
struct ResumeState {
  std::unordered_set<std::string> inputs;        // raw input names
  std::unordered_set<std::string> domains;       // normalized names
  std::unordered_set<std::string> registrables;  // registrable domains
  std::size_t lines = 0;
  /// Bytes dropped from the end of the log (partial or undecodable tail).
  std::size_t truncated_bytes = 0;
};

/// Reads the log at `path` (missing file = empty state), keeps the longest
/// prefix of decodable lines and truncates the file to it so appending
/// continues from a clean line boundary.
ResumeState load_checkpoint(const std::string& path);

}  // namespace fpscan::pipeline

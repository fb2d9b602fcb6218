#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace pf::cli {

std::string sha256_hex(const std::string& bytes);

// Writes files below one directory and records each with its content hash.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  void write(const std::string& name, const std::string& bytes);
  // manifest.json: {"files": [{"path", "sha256", "bytes"}]}, sorted by path.
  void write_manifest() const;

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::pair<std::string, size_t>> files_;
};

}  // namespace pf::cli

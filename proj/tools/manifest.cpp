#include "manifest.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>
#include <openssl/evp.h>

namespace pf::cli {

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr))
    throw std::runtime_error("SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned int i = 0; i < len; ++i) {
    s += hex[md[i] >> 4];
    s += hex[md[i] & 15];
  }
  return s;
}

OutputSet::OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir_.string() + ": " + ec.message());
}

void OutputSet::write(const std::string& name, const std::string& bytes) {
  if (name == "manifest.json") throw std::logic_error("manifest.json is reserved");
  std::ofstream f(dir_ / name, std::ios::binary);
  f << bytes;
  if (!f) throw std::runtime_error("cannot write " + (dir_ / name).string());
  files_[name] = {sha256_hex(bytes), bytes.size()};
}

void OutputSet::write_manifest() const {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& [name, v] : files_) list.push_back({{"path", name}, {"sha256", v.first}, {"bytes", v.second}});
  std::ofstream f(dir_ / "manifest.json", std::ios::binary);
  f << nlohmann::json{{"files", list}}.dump(2) << '\n';
  if (!f) throw std::runtime_error("cannot write manifest");
}

}  // namespace pf::cli

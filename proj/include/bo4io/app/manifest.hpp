#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <string>

#include <json.hpp>
#include <openssl/evp.h>

#include "bo4io/common.hpp"

namespace bo4io::app {

inline constexpr const char* kVersion = "0.1.0";

/// Hex SHA-256 of a byte string.
inline std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx.get(), md, &len) != 1)
    throw IoError("sha256: digest failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  out << content;
  if (!out.flush()) throw IoError("write failed: " + p.string());
}

inline std::string sha256_file(const std::filesystem::path& p) { return sha256_hex(read_file(p)); }

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

/// Run manifest: command, config echo, seeds, version, digests of inputs and outputs. The only
/// place where wall-clock data is stored.
struct Manifest {
  nlohmann::ordered_json j;

  Manifest(const std::string& command, const std::string& config_text, std::uint64_t seed) {
    j["command"] = command;
    j["version"] = kVersion;
    j["seed"] = seed;
    j["config"] = config_text;
    j["created_utc"] = utc_timestamp();
    j["inputs"] = nlohmann::ordered_json::object();
    j["outputs"] = nlohmann::ordered_json::object();
  }

  void input(const std::filesystem::path& p) { j["inputs"][p.filename().string()] = sha256_file(p); }
  void output(const std::filesystem::path& p) { j["outputs"][p.filename().string()] = sha256_file(p); }

  void save(const std::filesystem::path& p) const { write_file(p, j.dump(2) + "\n"); }
};

}  // namespace bo4io::app

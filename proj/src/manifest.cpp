#include "ocsi/manifest.hpp"

#include <array>
#include <fstream>
#include <memory>

#include <json.hpp>
#include <openssl/evp.h>

#include "ocsi/error.hpp"

namespace ocsi {

std::string sha256_hex(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string() + " for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256: init failed");
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0 && EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount())) != 1)
      throw Error("sha256: update failed");
  }
  if (in.bad()) throw Error("read failed: " + path.string());
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) throw Error("sha256: final failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

void RunManifest::add_input(const std::filesystem::path& path) { inputs[path.string()] = sha256_hex(path); }

void RunManifest::add_output(const std::filesystem::path& path) { outputs[path.string()] = sha256_hex(path); }

std::string RunManifest::to_json() const {
  nlohmann::json doc = {{"tool_version", tool_version},
                        {"subcommand", subcommand},
                        {"flags", flags},
                        {"inputs", inputs},
                        {"outputs", outputs},
                        {"seed", seed ? nlohmann::json(*seed) : nlohmann::json(nullptr)},
                        {"duration_seconds", duration_seconds}};
  return doc.dump(1) + "\n";
}

void save_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot create " + path.string());
  out << manifest.to_json();
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace ocsi

#include "manifest.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>

#include <openssl/evp.h>

#include "scls/error.hpp"
#include "scls/io.hpp"

namespace scls::cli {

std::string git_blob_hash(const std::string& content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  const bool ok = ctx && EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) &&
                  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  if (!ok) throw Error(ErrorCode::IoError, "SHA-1 digest failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

void RunManifest::add_input(const std::string& path) { inputs[path] = git_blob_hash(io::read_text(path)); }

void RunManifest::add_output(const std::string& name, const std::string& content) {
  outputs[name] = git_blob_hash(content);
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["command"] = command;
  j["arguments"] = arguments;
  j["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  j["tool_version"] = kToolVersion;
  j["timestamp"] = timestamp_now();
  return j;
}

std::string timestamp_now() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) t = static_cast<std::time_t>(std::atoll(epoch));
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<std::string> replay_arguments(const nlohmann::json& manifest) {
  if (!manifest.contains("arguments") || !manifest["arguments"].is_array())
    throw Error(ErrorCode::ParseError, "manifest has no 'arguments' array");
  return manifest["arguments"].get<std::vector<std::string>>();
}

}  // namespace scls::cli

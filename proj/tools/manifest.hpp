#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace scls::cli {

inline constexpr const char* kToolVersion = "1.0.0";

/// Git blob object id of `content`: sha1("blob <size>\0" + content).
std::string git_blob_hash(const std::string& content);

/// Record of one invocation. `arguments` omits --out and --threads, which
/// change neither results nor their bytes.
struct RunManifest {
  std::string command;
  std::vector<std::string> arguments;
  std::optional<std::uint64_t> seed;
  std::map<std::string, std::string> inputs;
  std::map<std::string, std::string> outputs;

  void add_input(const std::string& path);
  void add_output(const std::string& name, const std::string& content);
  nlohmann::json to_json() const;
};

/// UTC timestamp; SOURCE_DATE_EPOCH, when set, pins it for reproducible builds.
std::string timestamp_now();

/// Arguments to pass back to the parser when replaying a manifest.
std::vector<std::string> replay_arguments(const nlohmann::json& manifest);

}  // namespace scls::cli

#pragma once

// Helpers for tests that drive the command-line tool as a subprocess.

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "scls/io.hpp"
#include "scls/simulation.hpp"

namespace cli {

namespace fs = std::filesystem;

struct Result {
  int exit_code = -1;
  std::string out;
  std::string err;
};

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::string quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

class Workspace {
 public:
  explicit Workspace(const std::string& tag) {
    root_ = fs::temp_directory_path() / ("scls_cli_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  ~Workspace() { fs::remove_all(root_); }
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;

  fs::path path(const std::string& name) const { return root_ / name; }

  /// Runs the tool with `args` (already shell-quoted where needed).
  Result run(const std::string& args) const {
    const auto out = root_ / ".stdout", err = root_ / ".stderr";
    const std::string cmd = quote(SCLS_CLI_PATH) + " " + args + " >" + quote(out.string()) + " 2>" +
                            quote(err.string());
    const int status = std::system(cmd.c_str());
    Result r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  /// Writes `Y` as a composition CSV and returns its quoted path.
  std::string write(const std::string& name, const scls::CompositionMatrix& Y) const {
    std::ofstream f(path(name));
    scls::io::write_compositions_csv(f, Y);
    return quote(path(name).string());
  }

  std::string write_text(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
    return quote(path(name).string());
  }

 private:
  fs::path root_;
};

/// Every regular file below `dir`, keyed by relative path.
inline std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  if (fs::is_regular_file(dir)) {
    files[dir.filename().string()] = slurp(dir);
    return files;
  }
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = slurp(e.path());
  return files;
}

/// Runs `args` into fresh output locations with --threads 1, 8 and 1 again.
/// Returns an empty string when all three runs succeed with byte-identical
/// outputs, else a description of the first difference. `file` names the
/// output file for commands whose --out is a file rather than a directory.
inline std::string reproducibility_problem(const Workspace& ws, const std::string& args,
                                           const std::string& file = {}) {
  static int counter = 0;
  std::vector<std::map<std::string, std::string>> snaps;
  for (int threads : {1, 8, 1}) {
    const auto dir = ws.path("repro" + std::to_string(counter++));
    fs::create_directories(dir);
    const std::string out = file.empty() ? dir.string() : (dir / file).string();
    const auto r = ws.run(args + " --out " + quote(out) + " --threads " + std::to_string(threads));
    if (r.exit_code != 0) return "exit " + std::to_string(r.exit_code) + ": " + r.err;
    snaps.push_back(snapshot(dir));
  }
  if (snaps[0].size() < 2) return "expected an output file and a manifest";
  for (std::size_t k = 1; k < snaps.size(); ++k) {
    if (snaps[k] == snaps[0]) continue;
    for (const auto& [name, bytes] : snaps[0]) {
      const auto it = snaps[k].find(name);
      if (it == snaps[k].end() || it->second != bytes)
        return name + (k == 1 ? " differs between 1 and 8 threads" : " differs between repeated runs");
    }
    return "different file sets";
  }
  return {};
}

inline scls::SimData linked(scls::Index n, scls::Index Dr, std::uint64_t seed, double concentration = 5.0) {
  scls::SimConfig cfg;
  cfg.n = n;
  cfg.Dr = Dr;
  cfg.concentration = concentration;
  scls::Rng gen(seed);
  return scls::gen_linked_data(cfg, scls::ground_truth(Dr), gen);
}

}  // namespace cli

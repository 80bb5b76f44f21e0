#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace inertia::cli {

namespace fs = std::filesystem;

/// Exclusive claim on an output directory for the lifetime of a command.
class OutputLock {
 public:
  explicit OutputLock(const fs::path& dir);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  fs::path path_;
};

/// Writes the resolved configuration to <out>/config/<command>.json.
void echo_config(const RunConfig& cfg, const std::string& command);

fs::path default_bundle(const RunConfig& cfg);
fs::path default_checkpoint(const RunConfig& cfg);

void cmd_simulate(const RunConfig& cfg, std::ostream& log);
void cmd_train(const RunConfig& cfg, const fs::path& bundle, std::ostream& log);
void cmd_evaluate(const RunConfig& cfg, const fs::path& checkpoint, const fs::path& bundle, const std::string& split,
                  std::ostream& log);
void cmd_compare(const RunConfig& cfg, const std::vector<fs::path>& checkpoints, const std::vector<fs::path>& bundles,
                 std::ostream& log);
void cmd_opp(const RunConfig& cfg, const std::optional<fs::path>& restrict_bundle, std::ostream& log);
void cmd_featselect(const RunConfig& cfg, const fs::path& bundle, std::ostream& log);

}  // namespace inertia::cli

#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <vector>

namespace relcomp {

struct ProcessResult {
  int exit_code = -1;
  bool timed_out = false;
  std::string stdout_text;
  std::string stderr_text;
};

// Runs `executable args...` to completion, capturing both output streams.
// A process still running after `timeout` is killed and reported with
// timed_out = true. Throws Error(kBackend) if the process cannot be started.
ProcessResult run_process(const std::string& executable, const std::vector<std::string>& args,
                          std::chrono::milliseconds timeout = std::chrono::minutes(30));

// Child process whose stdout is read incrementally; stderr is discarded.
class ProcessStream {
 public:
  ProcessStream(const std::string& executable, const std::vector<std::string>& args);
  ~ProcessStream();
  ProcessStream(const ProcessStream&) = delete;
  ProcessStream& operator=(const ProcessStream&) = delete;

  std::istream& out();
  // Waits for exit (killing the child if output was not fully consumed).
  int finish();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace relcomp

// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <string>

namespace lfg::test {

struct CliResult {
  int code = -1;
  std::string output;  // stdout and stderr
};

// Runs the lfg binary with `args` (already shell-quoted) and waits for it.
inline CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(LFG_CLI_PATH) + " " + args + " 2>&1";
  CliResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe)) r.output += buf.data();
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

inline std::string quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

}  // namespace lfg::test

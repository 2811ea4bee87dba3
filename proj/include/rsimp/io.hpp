#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rsimp {

/// Whole-file read; throws std::runtime_error when the file cannot be opened.
std::string read_file(const std::string& path);

/// Write (truncate) a file; throws std::runtime_error on failure.
void write_file(const std::string& path, const std::string& content);

std::vector<std::string> read_lines(const std::string& path);

uint64_t fnv1a64(const std::string& data);
std::string fnv1a64_hex(const std::string& data);

/// Run a shell command, capturing stdout. Returns the process exit status.
int run_command(const std::string& cmd, std::string* output);

/// Single-quote a string for /bin/sh.
std::string shell_quote(const std::string& s);

}  // namespace rsimp

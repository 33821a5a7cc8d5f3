// Minimal helper for driving the CLI binary from tests.
#pragma once

#include <array>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace testutil {

struct CommandResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr interleaved
};

inline CommandResult run_command(const std::string& command) {
    CommandResult result;
    FILE* pipe = popen((command + " 2>&1").c_str(), "r");
    if (!pipe) throw std::runtime_error("popen failed for: " + command);
    std::array<char, 4096> buffer{};
    std::size_t n = 0;
    while ((n = fread(buffer.data(), 1, buffer.size(), pipe)) > 0) {
        result.output.append(buffer.data(), n);
    }
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

inline std::string mathpipe_bin() {
    const char* bin = std::getenv("MATHPIPE_BIN");
    if (!bin) throw std::runtime_error("MATHPIPE_BIN not set");
    return bin;
}

inline std::string data_dir() {
    const char* dir = std::getenv("MATHPIPE_DATA_DIR");
    if (!dir) throw std::runtime_error("MATHPIPE_DATA_DIR not set");
    return dir;
}

}  // namespace testutil

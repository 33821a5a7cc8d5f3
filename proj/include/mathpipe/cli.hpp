#pragma once

namespace mathpipe::cli {

// Subcommand front-end. Exit codes: 0 success, 1 validation/data errors
// (including partial generation failure), 2 usage/config errors.
int run(int argc, const char* const* argv);

}  // namespace mathpipe::cli

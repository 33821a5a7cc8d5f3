#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mathpipe {

// Machine-checkable error codes for every contract violation the toolkit
// reports. CLI maps these to exit code 1 (data/validation) or 2 (usage).
enum class Errc {
    FileNotFound,
    MalformedRecord,
    DuplicateId,
    DanglingProblemRef,
    EmptyProblemSet,
    EmptyModelAnswers,
    EmptyBenchmark,
    EmptyAnswerList,
    NoLowModeTraces,
    UnjudgedTrace,
    MissingReference,
    MissingPassRate,
    MissingConfig,
    MissingStepTime,
    OverMaxContext,
    TraceExceedsCapacity,
    PoolTooSmall,
    SizeMismatch,
    RunCountMismatch,
    ClientError,
    Timeout,
    JudgeError,
    ConfigError,
    InvalidSpec,
    UnknownSubcommand,
};

std::string_view errc_name(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace mathpipe

#pragma once

#include <cstdint>
#include <string>

#include "mathpipe/types.hpp"

namespace mathpipe {

// Abstracts the completion endpoint that turns a question into a solution
// trace. Implementations: DeterministicMockClient (offline, reproducible) and
// HttpGeneratorClient (chat-completion protocol).
class GeneratorClient {
public:
    virtual ~GeneratorClient() = default;
    virtual std::string generate(const std::string& question, Mode mode, Tool tool, std::int64_t seed,
                                 double temperature, double top_p, std::int64_t max_tokens) = 0;
};

// Verdicts whether a candidate answer is consistent with the expected one.
class JudgeClient {
public:
    virtual ~JudgeClient() = default;
    virtual bool consistent(const std::string& question, const std::string& expected_answer,
                            const std::string& candidate_answer) = 0;
};

}  // namespace mathpipe

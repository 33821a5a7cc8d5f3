#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mathpipe/generation_clients.hpp"
#include "mathpipe/types.hpp"

namespace mathpipe {

struct GenerationJob {
    std::string problem_id;
    std::string question;
    Mode mode = Mode::High;
    Tool tool = Tool::NoTIR;
    std::int64_t seed = 0;
    double temperature = 1.0;
    double top_p = 1.0;
    std::int64_t max_tokens = 131072;

    // Deterministic job identity; completion order never affects output.
    std::string trace_id() const;
};

// Exactly |problems| x |modes| x |tools| x samples_per_config jobs, seeds
// 0..samples_per_config-1, ordered by (problem_id, mode, tool, seed).
std::vector<GenerationJob> plan_generation(const std::vector<ProblemRecord>& problems,
                                           const GenerationSpec& spec);

struct GenerationFailure {
    GenerationJob job;
    std::string cause;
};

struct GenerationResult {
    std::vector<TraceRecord> traces;
    std::vector<GenerationFailure> failures;  // recorded, never silently dropped

    bool partial_failure() const { return !failures.empty(); }
};

// Runs jobs against the client with at most max_in_flight concurrent calls.
// final_answer comes from extract_final_answer, token_count from the
// injected counter; output is sorted by job key.
GenerationResult run_generation(const std::vector<GenerationJob>& jobs, GeneratorClient& client,
                                const TokenCounter& counter, int max_in_flight = 8);

// Sets `correct` on every trace: the judge's verdict for traces with a
// final_answer, false otherwise.
std::vector<TraceRecord> judge_traces(const ProblemRecord& problem, std::vector<TraceRecord> traces,
                                      JudgeClient& judge);

// Offline stand-in for the completion endpoint. Fully deterministic per
// (question, mode, tool, seed): synthesizes a reasoning trace whose length
// scales with the mode, optionally interleaves a python block, and ends in a
// \boxed{...} answer that is right or wrong depending on a difficulty score
// derived from the question.
class DeterministicMockClient final : public GeneratorClient {
public:
    std::string generate(const std::string& question, Mode mode, Tool tool, std::int64_t seed,
                         double temperature, double top_p, std::int64_t max_tokens) override;

    // The answer an ideal run reaches for this question; the synthetic
    // corpus generator uses the same function to seed extracted answers.
    static std::string ideal_answer(const std::string& question);
    // Probability in [0, 1] that one sampled solution reaches ideal_answer.
    static double solve_probability(const std::string& question, Mode mode, Tool tool);
};

// Local judge: wraps the eval module's canonicalizing comparator; the
// question is ignored.
class LocalComparatorJudge final : public JudgeClient {
public:
    bool consistent(const std::string& question, const std::string& expected_answer,
                    const std::string& candidate_answer) override;
};

struct EndpointConfig {
    std::string base_url;            // e.g. "http://localhost:8000"
    std::string model;
    std::string auth_env_var;        // env var holding the bearer token; empty = no auth
    int max_in_flight = 8;
    int timeout_seconds = 120;
    int max_attempts = 3;            // bounded retries with exponential backoff
    int backoff_initial_ms = 500;

    void validate() const;
};

// Chat-completion-style HTTP client. Sends the question as a user message
// with the reasoning mode as reasoning_effort and retries transient failures
// with exponential backoff.
class HttpGeneratorClient final : public GeneratorClient {
public:
    explicit HttpGeneratorClient(EndpointConfig config);
    std::string generate(const std::string& question, Mode mode, Tool tool, std::int64_t seed,
                         double temperature, double top_p, std::int64_t max_tokens) override;

private:
    EndpointConfig config_;
};

// LLM judge speaking the same chat protocol. The prompt template file uses
// {question}, {expected_answer} and {candidate_answer} placeholders; the
// verdict is the first case-insensitive yes/no token in the reply.
class HttpJudgeClient final : public JudgeClient {
public:
    HttpJudgeClient(EndpointConfig config, std::string prompt_template);
    bool consistent(const std::string& question, const std::string& expected_answer,
                    const std::string& candidate_answer) override;

private:
    EndpointConfig config_;
    std::string template_;
};

std::string fill_judge_template(const std::string& tmpl, const std::string& question,
                                const std::string& expected_answer, const std::string& candidate_answer);

// First case-insensitive "yes"/"no" token; nullopt when neither appears.
std::optional<bool> parse_yes_no(std::string_view reply);

std::string load_text_file(const std::string& path);

}  // namespace mathpipe

#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mathpipe/error.hpp"

namespace mathpipe {

enum class Source { AoPS, StackExchangeMath, Synthetic };
enum class Mode { High, Medium, Low };
enum class Tool { PythonTIR, NoTIR };
enum class AnswerProvenance { Extracted, MajorityVote, Replaced };
enum class RemovedReason { Decontaminated, TooEasy, ProofStyle, NoAnswer };

std::string_view to_string(Source v);
std::string_view to_string(Mode v);
std::string_view to_string(Tool v);
std::string_view to_string(AnswerProvenance v);
std::string_view to_string(RemovedReason v);

Source source_from_string(std::string_view s);
Mode mode_from_string(std::string_view s);
Tool tool_from_string(std::string_view s);
AnswerProvenance provenance_from_string(std::string_view s);
RemovedReason removed_reason_from_string(std::string_view s);

// One math problem. reference_answer is present iff answer_provenance is
// present; a set removed_reason excludes the record from downstream
// composition but keeps it visible for auditing.
struct ProblemRecord {
    std::string id;
    Source source = Source::Synthetic;
    std::string question;
    std::optional<std::string> extracted_answer;
    std::optional<std::string> reference_answer;
    std::optional<AnswerProvenance> answer_provenance;
    std::optional<RemovedReason> removed_reason;
    // Unknown fields from ingested files, preserved on round-trip.
    std::string extra_json;

    bool removed() const { return removed_reason.has_value(); }
};

// One generated solution trace. (problem_id, mode, tool, seed) is unique
// within a corpus; token_count is whatever the injected counter said about
// `text` at generation time.
struct TraceRecord {
    std::string id;
    std::string problem_id;
    Mode mode = Mode::High;
    Tool tool = Tool::NoTIR;
    std::int64_t seed = 0;
    std::string text;
    std::optional<std::string> final_answer;
    std::int64_t token_count = 0;
    std::optional<bool> correct;
    std::string extra_json;
};

// Sampling protocol: the cross product modes x tools x samples_per_config
// defines one generation job per (problem, mode, tool, seed).
struct GenerationSpec {
    std::set<Mode> modes = {Mode::High, Mode::Medium, Mode::Low};
    std::set<Tool> tools = {Tool::PythonTIR, Tool::NoTIR};
    int samples_per_config = 8;
    double temperature = 1.0;
    double top_p = 1.0;
    std::int64_t max_tokens = 131072;

    void validate() const;
};

class TokenCounter {
public:
    virtual ~TokenCounter() = default;
    // Deterministic; count("") == 0; monotone under concatenation.
    virtual std::int64_t count(std::string_view text) const = 0;
};

// Default approximation: one token per four bytes, rounded up. Real token
// counts are tokenizer-specific, so anything precise must be injected.
class ByteRatioTokenCounter final : public TokenCounter {
public:
    std::int64_t count(std::string_view text) const override {
        return static_cast<std::int64_t>((text.size() + 3) / 4);
    }
};

}  // namespace mathpipe

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "mathpipe/config.hpp"
#include "mathpipe/curation.hpp"

namespace mathpipe {

// Stage glue shared by the `pipeline` subcommand and the standalone
// subcommands, so running the chain step by step reproduces the pipeline
// byte for byte.

struct ReconcileOutcome {
    std::vector<ProblemRecord> reconciled;        // reference_answer + provenance set
    std::vector<ProblemRecord> removed_no_answer; // no extracted answer and no model answers
};

// Applies reconcile_answer per problem over its high-mode traces, using the
// judge as the consistency predicate.
ReconcileOutcome reconcile_problems(const std::vector<ProblemRecord>& problems,
                                    const std::vector<TraceRecord>& high_traces, JudgeClient& judge);

struct RatingOutcome {
    std::map<std::string, PassRate> rates;
    std::vector<TraceRecord> judged_traces;
    std::vector<ProblemRecord> unrated;  // no rating traces available
};

// Judges each problem's low-mode traces against its reference answer and
// computes per-problem pass rates.
RatingOutcome rate_problems(const std::vector<ProblemRecord>& problems,
                            const std::vector<TraceRecord>& low_traces, JudgeClient& judge);

// Sets `correct` on every trace (per-problem judge_traces semantics, input
// order preserved).
std::vector<TraceRecord> judge_corpus(const std::vector<ProblemRecord>& problems,
                                      std::vector<TraceRecord> traces, JudgeClient& judge);

struct BalanceOutcome {
    int final_bucket_index = 0;
    std::vector<std::string> final_stage_trace_ids;  // natural members plus sampled medium/low
    std::size_t sampled_medium = 0;
    std::size_t sampled_low = 0;

    std::string to_json() const;
    static BalanceOutcome from_json(const std::string& text);
};

// Balances the last bucket's mode mix by sampling medium/low traces from the
// earlier buckets. The sampled traces move to the final stage (a trace is
// packed exactly once per plan).
BalanceOutcome balance_final_stage(const std::vector<TraceRecord>& traces, const BucketSpec& spec,
                                   const ModeMix& mix, std::uint64_t seed);

std::string pass_rates_to_jsonl(const std::vector<ProblemRecord>& problems,
                                const std::map<std::string, PassRate>& rates);
std::map<std::string, PassRate> pass_rates_from_jsonl(const std::string& text);

struct PipelineOutcome {
    int retained_problems = 0;
    int retained_traces = 0;
    int stages = 0;
    bool partial_generation_failure = false;
};

// Full curation-to-planning chain on one config:
//   ingest -> decontaminate -> reconcile (high) -> rate (low) ->
//   difficulty filter -> full generation -> judge -> drop incorrect ->
//   stats -> bucket/pack (+ mode balancing) -> schedule/cost -> eval.
// Every artefact is written under output_dir with deterministic bytes.
PipelineOutcome run_pipeline(const PipelineConfig& config, const std::filesystem::path& output_dir,
                             std::ostream& log);

}  // namespace mathpipe

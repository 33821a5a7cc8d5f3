#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mathpipe/composition.hpp"
#include "mathpipe/curation.hpp"
#include "mathpipe/generation.hpp"
#include "mathpipe/planner.hpp"
#include "mathpipe/types.hpp"

namespace mathpipe {

struct EvalBenchmarkConfig {
    std::string name;
    std::string path;      // BenchmarkSet JSON
    Mode mode = Mode::High;
    Tool tool = Tool::NoTIR;
};

// One reproducible description of a full pipeline run. Parsing is strict:
// unknown keys anywhere raise ConfigError with the full key path.
struct PipelineConfig {
    CurationConfig curation;
    BucketSpec buckets = BucketSpec::defaults();
    ModeMix mode_mix;
    ParallelismTable parallelism_table;
    std::string cost_profile = "published";  // named profile or JSON file path
    GenerationSpec generation;
    std::optional<EndpointConfig> endpoint;  // absent = deterministic mock
    std::vector<EvalBenchmarkConfig> eval_benchmarks;
    std::string problems_path;
    std::string contamination_path;
    std::optional<std::string> judge_prompt_path;
    std::uint64_t seed = 0;
    std::size_t max_errors = 0;

    void validate() const;
    static PipelineConfig from_json_text(const std::string& text);
    static PipelineConfig load(const std::string& path);
};

}  // namespace mathpipe

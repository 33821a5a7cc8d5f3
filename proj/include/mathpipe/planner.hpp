#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mathpipe/composition.hpp"

namespace mathpipe {

// Tensor / context / pipeline / expert-tensor / expert-model parallel
// degrees for one training stage.
struct ParallelismConfig {
    int tp = 1;
    int cp = 1;
    int pp = 1;
    int etp = 1;
    int emp = 1;

    void validate() const;
    // Stable profile key, e.g. "tp4-cp2-pp1-etp1-emp4".
    std::string key() const;
    bool operator==(const ParallelismConfig&) const = default;
};

using ParallelismTable = std::map<std::int64_t, ParallelismConfig>;  // bucket ceiling -> config

// Measured cost inputs. Step times are seconds per optimizer step under a
// given (bucket, config). Stage totals, when supplied, override the
// steps x step-time product — profiles may carry measured wall-clock totals
// without disclosing step counts.
struct CostModel {
    std::map<std::pair<std::int64_t, std::string>, double> step_time_seconds;
    std::map<std::int64_t, double> stage_total_seconds;
    std::optional<double> full_context_total_seconds;
    std::int64_t global_batch_size = 2048;
    double learning_rate = 2e-4;  // pass-through training metadata

    void validate() const;
    std::string to_json() const;
    static CostModel from_json(const std::string& text);
};

struct CostProfile {
    ParallelismTable parallelism;
    CostModel cost;
};

// The measured Qwen3-30B-A3B profile: per-bucket parallelism configs, stage
// wall-clock totals, the full-context baseline total, and the 16K-bucket
// step-time anchors (18 s optimized vs 25 s under the 128K setup).
CostProfile published_profile();

// Named profile ("published") or a JSON profile file.
CostProfile load_cost_profile(const std::string& name_or_path);
std::string profile_to_json(const CostProfile& profile);

struct StageManifest {
    int stage_index = 0;
    std::int64_t bucket_ceiling = 0;
    ParallelismConfig parallelism;
    std::int64_t packed_sequence_count = 0;
    std::optional<ModeMix> mode_mix;  // final stage only
    std::int64_t estimated_steps = 0;
    double estimated_seconds = 0.0;
    double learning_rate = 0.0;
    std::int64_t global_batch_size = 0;
};

struct Schedule {
    std::vector<StageManifest> stages;
    double total_seconds = 0.0;

    std::string to_json() const;
    static Schedule from_json(const std::string& text);
};

// One manifest per non-empty bucket, ascending by ceiling; the last stage
// carries the mode mix. estimated_steps = ceil(sequences / batch).
Schedule build_schedule(const PackingPlan& plan, const ParallelismTable& table, const CostModel& cost,
                        const std::optional<ModeMix>& final_stage_mix = std::nullopt);

struct CostBreakdown {
    std::vector<std::pair<std::int64_t, double>> per_stage_seconds;  // (bucket ceiling, seconds)
    double total_seconds = 0.0;
};

CostBreakdown estimate_cost(const Schedule& schedule, const CostModel& cost);

// Total seconds when all data trains under the full-context configuration
// (largest bucket's parallelism), divided by the staged total.
double compare_to_full_context(const Schedule& schedule, const CostModel& cost,
                               const ParallelismConfig& full_context_config);

// Ceiling / TP / CP / PP / ETP / EMP columns plus sequence, step and cost
// columns, mirroring the profile table layout.
std::string render_schedule_table(const Schedule& schedule);
std::string render_speedup_line(double speedup);

}  // namespace mathpipe

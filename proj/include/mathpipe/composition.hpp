#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mathpipe/types.hpp"

namespace mathpipe {

// Ascending context ceilings in tokens. Ceilings are inclusive: a trace of
// exactly boundaries[i] tokens fits bucket i. Anything above the last
// boundary is unassignable (excluded with an audit entry, never truncated).
struct BucketSpec {
    std::vector<std::int64_t> boundaries;

    static BucketSpec defaults() { return {{16384, 32768, 65536, 131072}}; }

    std::size_t bucket_count() const { return boundaries.size(); }
    std::int64_t max_context() const { return boundaries.back(); }
    std::string label(std::size_t bucket) const;
    void validate() const;
};

// Smallest index i with token_count <= boundaries[i]. Throws OverMaxContext
// when the count exceeds the last boundary.
int assign_bucket(std::int64_t token_count, const BucketSpec& spec);

struct PackedSequence {
    std::vector<std::string> trace_ids;
    std::int64_t total_tokens = 0;
    std::int64_t capacity = 0;

    double fill_ratio() const {
        return capacity > 0 ? static_cast<double>(total_tokens) / static_cast<double>(capacity) : 0.0;
    }
};

// Anything with an id and a token count can be packed.
struct PackItem {
    std::string id;
    std::int64_t token_count = 0;
};

// First-fit-decreasing: sort by token count descending (ties by id), place
// each item into the first open sequence with room, else open a new one.
std::vector<PackedSequence> pack_items(std::vector<PackItem> items, std::int64_t capacity);
std::vector<PackedSequence> pack_sequences(const std::vector<TraceRecord>& traces, std::int64_t capacity);

struct ModeMix {
    double fraction_medium = 0.10;
    double fraction_low = 0.10;

    void validate() const;
};

// All of final_stage plus enough uniform-without-replacement samples from
// each pool that medium and low traces each hit their target fraction of the
// output (rounded to nearest, so off by at most one sample). Deterministic
// under seed.
std::vector<TraceRecord> balance_modes(const std::vector<TraceRecord>& final_stage,
                                       const std::vector<TraceRecord>& medium_pool,
                                       const std::vector<TraceRecord>& low_pool, const ModeMix& mix,
                                       std::uint64_t seed);

// For each problem present on both sides, keep min(count_a, count_b) traces
// from each side (selection by ascending trace id); problems on one side only
// are dropped.
std::pair<std::vector<TraceRecord>, std::vector<TraceRecord>> match_counts(
    const std::vector<TraceRecord>& dataset_a, const std::vector<TraceRecord>& dataset_b);

// Half-half mix of two equal-sized datasets: ceil(|A|/2) from A plus
// floor(|B|/2) from B, sampled uniformly without replacement.
std::vector<TraceRecord> mix_datasets(const std::vector<TraceRecord>& dataset_a,
                                      const std::vector<TraceRecord>& dataset_b, std::uint64_t seed);

// Replace a uniform fraction of `base` with samples from `pool`, keeping the
// output size equal to |base|.
std::vector<TraceRecord> replace_fraction(const std::vector<TraceRecord>& base,
                                          const std::vector<TraceRecord>& pool, double fraction,
                                          std::uint64_t seed);

struct BucketPlan {
    int bucket_index = 0;
    std::int64_t capacity = 0;
    std::vector<PackedSequence> sequences;

    std::int64_t trace_count() const;
    double mean_fill_ratio() const;
};

struct PackingPlan {
    BucketSpec spec;
    std::vector<BucketPlan> buckets;  // one per bucket, possibly empty
    std::optional<ModeMix> mode_mix;  // recorded when the final stage was balanced

    std::string to_json() const;
    static PackingPlan from_json(const std::string& text);
};

struct PackOptions {
    // When true, traces of different (mode, tool) settings never share a
    // packed sequence.
    bool segregate_modes = false;
    // Trace ids forced into the last bucket (mode balancing moves short
    // medium/low traces there); membership elsewhere is by token count.
    std::vector<std::string> final_stage_overrides;
};

struct PackResult {
    PackingPlan plan;
    std::vector<std::string> over_max_trace_ids;  // excluded, for the audit log
};

// Bucket every trace by token count and run FFD per bucket.
PackResult pack_corpus(const std::vector<TraceRecord>& traces, const BucketSpec& spec,
                       const PackOptions& options = {});

}  // namespace mathpipe

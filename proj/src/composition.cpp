#include "mathpipe/composition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "json_util.hpp"
#include "mathpipe/rng.hpp"

namespace mathpipe {

void BucketSpec::validate() const {
    if (boundaries.empty()) raise(Errc::InvalidSpec, "bucket spec needs at least one boundary");
    for (std::size_t i = 0; i < boundaries.size(); ++i) {
        if (boundaries[i] <= 0) raise(Errc::InvalidSpec, "bucket boundaries must be positive");
        if (i > 0 && boundaries[i] <= boundaries[i - 1]) {
            raise(Errc::InvalidSpec, "bucket boundaries must be strictly ascending");
        }
    }
}

namespace {

std::string format_tokens(std::int64_t tokens) {
    if (tokens >= 1024 && tokens % 1024 == 0) return std::to_string(tokens / 1024) + "K";
    return std::to_string(tokens);
}

}  // namespace

std::string BucketSpec::label(std::size_t bucket) const {
    if (bucket == 0) return "<=" + format_tokens(boundaries.front());
    if (bucket + 1 == boundaries.size()) return ">=" + format_tokens(boundaries[bucket - 1]);
    return format_tokens(boundaries[bucket - 1]) + "-" + format_tokens(boundaries[bucket]);
}

int assign_bucket(std::int64_t token_count, const BucketSpec& spec) {
    spec.validate();
    if (token_count < 0) raise(Errc::InvalidSpec, "token count must be >= 0");
    const auto it = std::lower_bound(spec.boundaries.begin(), spec.boundaries.end(), token_count);
    if (it == spec.boundaries.end()) {
        raise(Errc::OverMaxContext, std::to_string(token_count) + " tokens exceed the maximum context " +
                                        std::to_string(spec.boundaries.back()));
    }
    return static_cast<int>(it - spec.boundaries.begin());
}

std::vector<PackedSequence> pack_items(std::vector<PackItem> items, std::int64_t capacity) {
    for (const PackItem& item : items) {
        if (item.token_count > capacity) {
            raise(Errc::TraceExceedsCapacity,
                  "trace " + item.id + " (" + std::to_string(item.token_count) +
                      " tokens) exceeds capacity " + std::to_string(capacity));
        }
    }
    std::sort(items.begin(), items.end(), [](const PackItem& a, const PackItem& b) {
        return a.token_count != b.token_count ? a.token_count > b.token_count : a.id < b.id;
    });

    std::vector<PackedSequence> sequences;
    for (const PackItem& item : items) {
        bool placed = false;
        for (PackedSequence& seq : sequences) {
            if (seq.total_tokens + item.token_count <= capacity) {
                seq.trace_ids.push_back(item.id);
                seq.total_tokens += item.token_count;
                placed = true;
                break;
            }
        }
        if (!placed) {
            sequences.push_back({{item.id}, item.token_count, capacity});
        }
    }
    return sequences;
}

std::vector<PackedSequence> pack_sequences(const std::vector<TraceRecord>& traces, std::int64_t capacity) {
    std::vector<PackItem> items;
    items.reserve(traces.size());
    for (const TraceRecord& trace : traces) items.push_back({trace.id, trace.token_count});
    return pack_items(std::move(items), capacity);
}

void ModeMix::validate() const {
    if (fraction_medium < 0.0 || fraction_low < 0.0) {
        raise(Errc::InvalidSpec, "mode-mix fractions must be >= 0");
    }
    if (fraction_medium + fraction_low >= 1.0) {
        raise(Errc::InvalidSpec, "mode-mix fractions must sum to < 1");
    }
}

namespace {

std::vector<TraceRecord> sample_traces(const std::vector<TraceRecord>& pool, std::size_t n, DetRng& rng) {
    std::vector<TraceRecord> out;
    out.reserve(n);
    for (std::size_t i : sample_indices(pool.size(), n, rng)) out.push_back(pool[i]);
    std::sort(out.begin(), out.end(),
              [](const TraceRecord& a, const TraceRecord& b) { return a.id < b.id; });
    return out;
}

}  // namespace

std::vector<TraceRecord> balance_modes(const std::vector<TraceRecord>& final_stage,
                                       const std::vector<TraceRecord>& medium_pool,
                                       const std::vector<TraceRecord>& low_pool, const ModeMix& mix,
                                       std::uint64_t seed) {
    mix.validate();
    std::unordered_set<std::string> stage_ids;
    for (const TraceRecord& trace : final_stage) stage_ids.insert(trace.id);
    for (const auto* pool : {&medium_pool, &low_pool}) {
        for (const TraceRecord& trace : *pool) {
            if (stage_ids.contains(trace.id)) {
                raise(Errc::InvalidSpec, "pool trace " + trace.id + " already in the final stage");
            }
        }
    }

    // Target output size T satisfies: existing non-medium/low traces make up
    // the remaining (1 - fm - fl) share of T.
    std::int64_t medium_have = 0, low_have = 0;
    for (const TraceRecord& trace : final_stage) {
        if (trace.mode == Mode::Medium) ++medium_have;
        if (trace.mode == Mode::Low) ++low_have;
    }
    const double high_share = static_cast<double>(final_stage.size() - medium_have - low_have);
    const double target_total = high_share / (1.0 - mix.fraction_medium - mix.fraction_low);
    const auto needed = [&](double fraction, std::int64_t have) {
        return static_cast<std::size_t>(std::max<std::int64_t>(
            0, std::llround(fraction * target_total) - have));
    };
    const std::size_t need_medium = needed(mix.fraction_medium, medium_have);
    const std::size_t need_low = needed(mix.fraction_low, low_have);

    if (need_medium > medium_pool.size()) {
        raise(Errc::PoolTooSmall, "medium pool has " + std::to_string(medium_pool.size()) +
                                      " traces, need " + std::to_string(need_medium));
    }
    if (need_low > low_pool.size()) {
        raise(Errc::PoolTooSmall, "low pool has " + std::to_string(low_pool.size()) + " traces, need " +
                                      std::to_string(need_low));
    }

    DetRng rng(seed);
    std::vector<TraceRecord> out = final_stage;
    for (TraceRecord& trace : sample_traces(medium_pool, need_medium, rng)) out.push_back(std::move(trace));
    for (TraceRecord& trace : sample_traces(low_pool, need_low, rng)) out.push_back(std::move(trace));
    return out;
}

namespace {

std::map<std::string, std::vector<TraceRecord>> group_by_problem(const std::vector<TraceRecord>& traces) {
    std::map<std::string, std::vector<TraceRecord>> groups;
    for (const TraceRecord& trace : traces) groups[trace.problem_id].push_back(trace);
    for (auto& [_, group] : groups) {
        std::sort(group.begin(), group.end(),
                  [](const TraceRecord& a, const TraceRecord& b) { return a.id < b.id; });
    }
    return groups;
}

}  // namespace

std::pair<std::vector<TraceRecord>, std::vector<TraceRecord>> match_counts(
    const std::vector<TraceRecord>& dataset_a, const std::vector<TraceRecord>& dataset_b) {
    const auto groups_a = group_by_problem(dataset_a);
    const auto groups_b = group_by_problem(dataset_b);
    std::vector<TraceRecord> out_a, out_b;
    for (const auto& [pid, group_a] : groups_a) {
        auto it = groups_b.find(pid);
        if (it == groups_b.end()) continue;
        const auto& group_b = it->second;
        const std::size_t keep = std::min(group_a.size(), group_b.size());
        out_a.insert(out_a.end(), group_a.begin(), group_a.begin() + static_cast<std::ptrdiff_t>(keep));
        out_b.insert(out_b.end(), group_b.begin(), group_b.begin() + static_cast<std::ptrdiff_t>(keep));
    }
    return {std::move(out_a), std::move(out_b)};
}

std::vector<TraceRecord> mix_datasets(const std::vector<TraceRecord>& dataset_a,
                                      const std::vector<TraceRecord>& dataset_b, std::uint64_t seed) {
    if (dataset_a.size() != dataset_b.size()) {
        raise(Errc::SizeMismatch, "datasets must have equal size after match_counts (" +
                                      std::to_string(dataset_a.size()) + " vs " +
                                      std::to_string(dataset_b.size()) + ")");
    }
    const std::size_t from_a = (dataset_a.size() + 1) / 2;
    const std::size_t from_b = dataset_b.size() / 2;
    DetRng rng(seed);
    std::vector<TraceRecord> out;
    out.reserve(dataset_a.size());
    for (TraceRecord& trace : sample_traces(dataset_a, from_a, rng)) out.push_back(std::move(trace));
    for (TraceRecord& trace : sample_traces(dataset_b, from_b, rng)) out.push_back(std::move(trace));
    return out;
}

std::vector<TraceRecord> replace_fraction(const std::vector<TraceRecord>& base,
                                          const std::vector<TraceRecord>& pool, double fraction,
                                          std::uint64_t seed) {
    if (fraction < 0.0 || fraction > 1.0) raise(Errc::InvalidSpec, "fraction must be in [0, 1]");
    const std::size_t n = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(base.size())));
    if (pool.size() < n) {
        raise(Errc::PoolTooSmall, "replacement pool has " + std::to_string(pool.size()) +
                                      " traces, need " + std::to_string(n));
    }
    DetRng rng(seed);
    const auto removed = sample_indices(base.size(), n, rng);
    std::unordered_set<std::size_t> removed_set(removed.begin(), removed.end());
    std::vector<TraceRecord> out;
    out.reserve(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
        if (!removed_set.contains(i)) out.push_back(base[i]);
    }
    for (TraceRecord& trace : sample_traces(pool, n, rng)) out.push_back(std::move(trace));
    return out;
}

std::int64_t BucketPlan::trace_count() const {
    std::int64_t n = 0;
    for (const PackedSequence& seq : sequences) n += static_cast<std::int64_t>(seq.trace_ids.size());
    return n;
}

double BucketPlan::mean_fill_ratio() const {
    if (sequences.empty()) return 0.0;
    double sum = 0.0;
    for (const PackedSequence& seq : sequences) sum += seq.fill_ratio();
    return sum / static_cast<double>(sequences.size());
}

std::string PackingPlan::to_json() const {
    ojson j;
    j["boundaries"] = spec.boundaries;
    if (mode_mix) {
        j["mode_mix"] = {{"fraction_medium", mode_mix->fraction_medium},
                         {"fraction_low", mode_mix->fraction_low}};
    }
    ojson buckets_json = ojson::array();
    for (const BucketPlan& bucket : buckets) {
        ojson b;
        b["bucket_index"] = bucket.bucket_index;
        b["capacity"] = bucket.capacity;
        b["sequence_count"] = bucket.sequences.size();
        b["trace_count"] = bucket.trace_count();
        b["mean_fill_ratio"] = bucket.mean_fill_ratio();
        ojson sequences = ojson::array();
        for (const PackedSequence& seq : bucket.sequences) {
            sequences.push_back({{"trace_ids", seq.trace_ids}, {"total_tokens", seq.total_tokens}});
        }
        b["sequences"] = std::move(sequences);
        buckets_json.push_back(std::move(b));
    }
    j["buckets"] = std::move(buckets_json);
    return j.dump(2) + "\n";
}

PackingPlan PackingPlan::from_json(const std::string& text) {
    const ojson j = jsonu::parse(text, Errc::ConfigError, "packing plan");
    PackingPlan plan;
    const ojson& boundaries = jsonu::require(j, "boundaries", Errc::ConfigError, "packing plan");
    for (const ojson& b : boundaries) plan.spec.boundaries.push_back(b.get<std::int64_t>());
    plan.spec.validate();
    if (auto it = j.find("mode_mix"); it != j.end() && !it->is_null()) {
        ModeMix mix;
        mix.fraction_medium = jsonu::require_number(*it, "fraction_medium", Errc::ConfigError, "mode_mix");
        mix.fraction_low = jsonu::require_number(*it, "fraction_low", Errc::ConfigError, "mode_mix");
        mix.validate();
        plan.mode_mix = mix;
    }
    const ojson& buckets = jsonu::require(j, "buckets", Errc::ConfigError, "packing plan");
    for (const ojson& b : buckets) {
        BucketPlan bucket;
        bucket.bucket_index = static_cast<int>(jsonu::require_int(b, "bucket_index", Errc::ConfigError, "bucket"));
        bucket.capacity = jsonu::require_int(b, "capacity", Errc::ConfigError, "bucket");
        const ojson& sequences = jsonu::require(b, "sequences", Errc::ConfigError, "bucket");
        for (const ojson& s : sequences) {
            PackedSequence seq;
            seq.capacity = bucket.capacity;
            seq.total_tokens = jsonu::require_int(s, "total_tokens", Errc::ConfigError, "sequence");
            const ojson& ids = jsonu::require(s, "trace_ids", Errc::ConfigError, "sequence");
            for (const ojson& id : ids) seq.trace_ids.push_back(id.get<std::string>());
            bucket.sequences.push_back(std::move(seq));
        }
        plan.buckets.push_back(std::move(bucket));
    }
    return plan;
}

PackResult pack_corpus(const std::vector<TraceRecord>& traces, const BucketSpec& spec,
                       const PackOptions& options) {
    spec.validate();
    const std::unordered_set<std::string> overrides(options.final_stage_overrides.begin(),
                                                    options.final_stage_overrides.end());
    const int last_bucket = static_cast<int>(spec.bucket_count()) - 1;

    PackResult result;
    result.plan.spec = spec;
    std::vector<std::vector<const TraceRecord*>> per_bucket(spec.bucket_count());
    for (const TraceRecord& trace : traces) {
        if (trace.token_count > spec.max_context()) {
            result.over_max_trace_ids.push_back(trace.id);
            continue;
        }
        const int bucket = overrides.contains(trace.id) ? last_bucket : assign_bucket(trace.token_count, spec);
        per_bucket[static_cast<std::size_t>(bucket)].push_back(&trace);
    }
    std::sort(result.over_max_trace_ids.begin(), result.over_max_trace_ids.end());

    for (std::size_t bucket = 0; bucket < per_bucket.size(); ++bucket) {
        BucketPlan plan_bucket;
        plan_bucket.bucket_index = static_cast<int>(bucket);
        plan_bucket.capacity = spec.boundaries[bucket];

        // Optionally keep (mode, tool) groups in separate sequences.
        std::map<std::pair<int, int>, std::vector<PackItem>> groups;
        for (const TraceRecord* trace : per_bucket[bucket]) {
            const auto key = options.segregate_modes
                                 ? std::make_pair(static_cast<int>(trace->mode), static_cast<int>(trace->tool))
                                 : std::make_pair(0, 0);
            groups[key].push_back({trace->id, trace->token_count});
        }
        for (auto& [_, items] : groups) {
            for (PackedSequence& seq : pack_items(std::move(items), plan_bucket.capacity)) {
                plan_bucket.sequences.push_back(std::move(seq));
            }
        }
        result.plan.buckets.push_back(std::move(plan_bucket));
    }
    return result;
}

}  // namespace mathpipe

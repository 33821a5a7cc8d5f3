#include "mathpipe/planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json_util.hpp"

namespace mathpipe {

void ParallelismConfig::validate() const {
    for (int degree : {tp, cp, pp, etp, emp}) {
        if (degree < 1) raise(Errc::InvalidSpec, "parallel degrees must be >= 1");
    }
}

std::string ParallelismConfig::key() const {
    std::ostringstream out;
    out << "tp" << tp << "-cp" << cp << "-pp" << pp << "-etp" << etp << "-emp" << emp;
    return out.str();
}

void CostModel::validate() const {
    if (global_batch_size < 1) raise(Errc::InvalidSpec, "global_batch_size must be >= 1");
    for (const auto& [key, seconds] : step_time_seconds) {
        if (seconds <= 0.0) {
            raise(Errc::InvalidSpec, "step time for bucket " + std::to_string(key.first) + " must be > 0");
        }
    }
    for (const auto& [bucket, seconds] : stage_total_seconds) {
        if (seconds < 0.0) {
            raise(Errc::InvalidSpec, "stage total for bucket " + std::to_string(bucket) + " must be >= 0");
        }
    }
}

CostProfile published_profile() {
    CostProfile profile;
    profile.parallelism = {
        {16384, {4, 2, 1, 1, 4}},
        {32768, {4, 4, 1, 1, 8}},
        {65536, {4, 8, 1, 1, 8}},
        {131072, {4, 8, 1, 1, 8}},
    };
    CostModel& cost = profile.cost;
    cost.global_batch_size = 2048;
    cost.learning_rate = 2e-4;
    // Measured wall-clock totals per stage and for the fixed full-context
    // baseline, plus the 16K step-time anchors (optimized vs 128K setup).
    cost.stage_total_seconds = {{16384, 117248.0}, {32768, 58988.0}, {65536, 56801.0}, {131072, 22197.0}};
    cost.full_context_total_seconds = 559802.0;
    cost.step_time_seconds[{16384, ParallelismConfig{4, 2, 1, 1, 4}.key()}] = 18.0;
    cost.step_time_seconds[{16384, ParallelismConfig{4, 8, 1, 1, 8}.key()}] = 25.0;
    return profile;
}

namespace {

ParallelismConfig parallelism_from_json(const ojson& j, const std::string& what) {
    ParallelismConfig config;
    config.tp = static_cast<int>(jsonu::require_int(j, "tp", Errc::ConfigError, what));
    config.cp = static_cast<int>(jsonu::require_int(j, "cp", Errc::ConfigError, what));
    config.pp = static_cast<int>(jsonu::require_int(j, "pp", Errc::ConfigError, what));
    config.etp = static_cast<int>(jsonu::require_int(j, "etp", Errc::ConfigError, what));
    config.emp = static_cast<int>(jsonu::require_int(j, "emp", Errc::ConfigError, what));
    config.validate();
    return config;
}

ojson parallelism_to_json(const ParallelismConfig& config) {
    return {{"tp", config.tp}, {"cp", config.cp}, {"pp", config.pp}, {"etp", config.etp}, {"emp", config.emp}};
}

std::int64_t parse_bucket_key(const std::string& key, const std::string& what) {
    try {
        std::size_t pos = 0;
        const std::int64_t bucket = std::stoll(key, &pos);
        if (pos != key.size() || bucket <= 0) throw std::invalid_argument(key);
        return bucket;
    } catch (const std::exception&) {
        raise(Errc::ConfigError, what + ": bucket key '" + key + "' is not a positive integer");
    }
}

std::string format_tokens(std::int64_t tokens) {
    if (tokens >= 1024 && tokens % 1024 == 0) return std::to_string(tokens / 1024) + "K";
    return std::to_string(tokens);
}

}  // namespace

std::string CostModel::to_json() const {
    ojson j;
    j["global_batch_size"] = global_batch_size;
    j["learning_rate"] = learning_rate;
    ojson step_times = ojson::object();
    for (const auto& [key, seconds] : step_time_seconds) {
        step_times[std::to_string(key.first)][key.second] = seconds;
    }
    j["step_time_seconds"] = std::move(step_times);
    if (!stage_total_seconds.empty()) {
        ojson totals = ojson::object();
        for (const auto& [bucket, seconds] : stage_total_seconds) totals[std::to_string(bucket)] = seconds;
        j["stage_total_seconds"] = std::move(totals);
    }
    if (full_context_total_seconds) j["full_context_total_seconds"] = *full_context_total_seconds;
    return j.dump(2) + "\n";
}

CostModel CostModel::from_json(const std::string& text) {
    const ojson j = jsonu::parse(text, Errc::ConfigError, "cost model");
    CostModel cost;
    cost.global_batch_size = jsonu::require_int(j, "global_batch_size", Errc::ConfigError, "cost model");
    if (auto it = j.find("learning_rate"); it != j.end()) cost.learning_rate = it->get<double>();
    if (auto it = j.find("step_time_seconds"); it != j.end()) {
        for (const auto& [bucket_key, entries] : it->items()) {
            const std::int64_t bucket = parse_bucket_key(bucket_key, "step_time_seconds");
            for (const auto& [config_key, seconds] : entries.items()) {
                cost.step_time_seconds[{bucket, config_key}] = seconds.get<double>();
            }
        }
    }
    if (auto it = j.find("stage_total_seconds"); it != j.end()) {
        for (const auto& [bucket_key, seconds] : it->items()) {
            cost.stage_total_seconds[parse_bucket_key(bucket_key, "stage_total_seconds")] =
                seconds.get<double>();
        }
    }
    if (auto it = j.find("full_context_total_seconds"); it != j.end()) {
        cost.full_context_total_seconds = it->get<double>();
    }
    cost.validate();
    return cost;
}

std::string profile_to_json(const CostProfile& profile) {
    ojson j = ojson::parse(profile.cost.to_json());
    ojson parallelism = ojson::object();
    for (const auto& [bucket, config] : profile.parallelism) {
        parallelism[std::to_string(bucket)] = parallelism_to_json(config);
    }
    j["parallelism"] = std::move(parallelism);
    return j.dump(2) + "\n";
}

CostProfile load_cost_profile(const std::string& name_or_path) {
    if (name_or_path == "published") return published_profile();
    std::ifstream in(name_or_path, std::ios::binary);
    if (!in) raise(Errc::FileNotFound, "cannot open cost profile " + name_or_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    const ojson j = jsonu::parse(buf.str(), Errc::ConfigError, "cost profile");
    CostProfile profile;
    // The profile file is the cost model plus a parallelism table.
    ojson cost_only = j;
    cost_only.erase("parallelism");
    profile.cost = CostModel::from_json(cost_only.dump());
    if (auto it = j.find("parallelism"); it != j.end()) {
        for (const auto& [bucket_key, config] : it->items()) {
            profile.parallelism[parse_bucket_key(bucket_key, "parallelism")] =
                parallelism_from_json(config, "parallelism entry");
        }
    }
    return profile;
}

namespace {

double stage_cost_seconds(std::int64_t bucket, const ParallelismConfig& config, std::int64_t steps,
                          const CostModel& cost) {
    if (auto it = cost.stage_total_seconds.find(bucket); it != cost.stage_total_seconds.end()) {
        return it->second;
    }
    auto it = cost.step_time_seconds.find({bucket, config.key()});
    if (it == cost.step_time_seconds.end()) {
        raise(Errc::MissingStepTime,
              "no step time for bucket " + std::to_string(bucket) + " under config " + config.key());
    }
    return static_cast<double>(steps) * it->second;
}

}  // namespace

Schedule build_schedule(const PackingPlan& plan, const ParallelismTable& table, const CostModel& cost,
                        const std::optional<ModeMix>& final_stage_mix) {
    cost.validate();
    Schedule schedule;
    std::vector<const BucketPlan*> nonempty;
    for (const BucketPlan& bucket : plan.buckets) {
        if (!bucket.sequences.empty()) nonempty.push_back(&bucket);
    }
    std::sort(nonempty.begin(), nonempty.end(),
              [](const BucketPlan* a, const BucketPlan* b) { return a->capacity < b->capacity; });

    for (std::size_t i = 0; i < nonempty.size(); ++i) {
        const BucketPlan& bucket = *nonempty[i];
        auto config_it = table.find(bucket.capacity);
        if (config_it == table.end()) {
            raise(Errc::MissingConfig,
                  "no parallelism config for bucket " + std::to_string(bucket.capacity));
        }
        StageManifest stage;
        stage.stage_index = static_cast<int>(i);
        stage.bucket_ceiling = bucket.capacity;
        stage.parallelism = config_it->second;
        stage.packed_sequence_count = static_cast<std::int64_t>(bucket.sequences.size());
        stage.estimated_steps =
            (stage.packed_sequence_count + cost.global_batch_size - 1) / cost.global_batch_size;
        stage.estimated_seconds =
            stage_cost_seconds(bucket.capacity, stage.parallelism, stage.estimated_steps, cost);
        stage.learning_rate = cost.learning_rate;
        stage.global_batch_size = cost.global_batch_size;
        if (i + 1 == nonempty.size()) {
            stage.mode_mix = final_stage_mix ? final_stage_mix : plan.mode_mix;
        }
        schedule.total_seconds += stage.estimated_seconds;
        schedule.stages.push_back(std::move(stage));
    }
    return schedule;
}

CostBreakdown estimate_cost(const Schedule& schedule, const CostModel& cost) {
    cost.validate();
    CostBreakdown breakdown;
    for (const StageManifest& stage : schedule.stages) {
        const double seconds =
            stage_cost_seconds(stage.bucket_ceiling, stage.parallelism, stage.estimated_steps, cost);
        breakdown.per_stage_seconds.emplace_back(stage.bucket_ceiling, seconds);
        breakdown.total_seconds += seconds;
    }
    return breakdown;
}

double compare_to_full_context(const Schedule& schedule, const CostModel& cost,
                               const ParallelismConfig& full_context_config) {
    const double staged = estimate_cost(schedule, cost).total_seconds;
    if (staged <= 0.0) raise(Errc::InvalidSpec, "staged schedule has zero estimated cost");

    double full = 0.0;
    if (cost.full_context_total_seconds) {
        full = *cost.full_context_total_seconds;
    } else {
        for (const StageManifest& stage : schedule.stages) {
            auto it = cost.step_time_seconds.find({stage.bucket_ceiling, full_context_config.key()});
            if (it == cost.step_time_seconds.end()) {
                raise(Errc::MissingStepTime, "no full-context step time for bucket " +
                                                 std::to_string(stage.bucket_ceiling) + " under config " +
                                                 full_context_config.key());
            }
            full += static_cast<double>(stage.estimated_steps) * it->second;
        }
    }
    return full / staged;
}

std::string Schedule::to_json() const {
    ojson j;
    ojson stages_json = ojson::array();
    for (const StageManifest& stage : stages) {
        ojson s;
        s["stage_index"] = stage.stage_index;
        s["bucket_ceiling"] = stage.bucket_ceiling;
        s["parallelism"] = parallelism_to_json(stage.parallelism);
        s["packed_sequence_count"] = stage.packed_sequence_count;
        s["estimated_steps"] = stage.estimated_steps;
        s["estimated_seconds"] = stage.estimated_seconds;
        s["learning_rate"] = stage.learning_rate;
        s["global_batch_size"] = stage.global_batch_size;
        if (stage.mode_mix) {
            s["mode_mix"] = {{"fraction_medium", stage.mode_mix->fraction_medium},
                             {"fraction_low", stage.mode_mix->fraction_low}};
        }
        stages_json.push_back(std::move(s));
    }
    j["stages"] = std::move(stages_json);
    j["total_seconds"] = total_seconds;
    return j.dump(2) + "\n";
}

Schedule Schedule::from_json(const std::string& text) {
    const ojson j = jsonu::parse(text, Errc::ConfigError, "schedule");
    Schedule schedule;
    const ojson& stages = jsonu::require(j, "stages", Errc::ConfigError, "schedule");
    for (const ojson& s : stages) {
        StageManifest stage;
        stage.stage_index = static_cast<int>(jsonu::require_int(s, "stage_index", Errc::ConfigError, "stage"));
        stage.bucket_ceiling = jsonu::require_int(s, "bucket_ceiling", Errc::ConfigError, "stage");
        stage.parallelism =
            parallelism_from_json(jsonu::require(s, "parallelism", Errc::ConfigError, "stage"), "stage");
        stage.packed_sequence_count =
            jsonu::require_int(s, "packed_sequence_count", Errc::ConfigError, "stage");
        stage.estimated_steps = jsonu::require_int(s, "estimated_steps", Errc::ConfigError, "stage");
        stage.estimated_seconds = jsonu::require_number(s, "estimated_seconds", Errc::ConfigError, "stage");
        stage.learning_rate = jsonu::require_number(s, "learning_rate", Errc::ConfigError, "stage");
        stage.global_batch_size = jsonu::require_int(s, "global_batch_size", Errc::ConfigError, "stage");
        if (auto it = s.find("mode_mix"); it != s.end() && !it->is_null()) {
            ModeMix mix;
            mix.fraction_medium = jsonu::require_number(*it, "fraction_medium", Errc::ConfigError, "mode_mix");
            mix.fraction_low = jsonu::require_number(*it, "fraction_low", Errc::ConfigError, "mode_mix");
            stage.mode_mix = mix;
        }
        schedule.stages.push_back(std::move(stage));
    }
    schedule.total_seconds = jsonu::require_number(j, "total_seconds", Errc::ConfigError, "schedule");
    return schedule;
}

std::string render_schedule_table(const Schedule& schedule) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"Context length", "TP", "CP", "PP", "ETP", "EMP", "Sequences", "Steps", "Est. seconds"});
    for (const StageManifest& stage : schedule.stages) {
        char seconds[32];
        std::snprintf(seconds, sizeof(seconds), "%.0f", stage.estimated_seconds);
        rows.push_back({format_tokens(stage.bucket_ceiling), std::to_string(stage.parallelism.tp),
                        std::to_string(stage.parallelism.cp), std::to_string(stage.parallelism.pp),
                        std::to_string(stage.parallelism.etp), std::to_string(stage.parallelism.emp),
                        std::to_string(stage.packed_sequence_count), std::to_string(stage.estimated_steps),
                        seconds});
    }

    std::vector<std::size_t> widths(rows.front().size(), 0);
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
    }
    std::ostringstream out;
    for (const auto& row : rows) {
        std::string line;
        for (std::size_t c = 0; c < row.size(); ++c) {
            line += row[c];
            if (c + 1 < row.size()) line.append(widths[c] - row[c].size() + 2, ' ');
        }
        out << line << "\n";
    }
    return out.str();
}

std::string render_speedup_line(double speedup) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "Speedup vs full-context training: %.1fx", speedup);
    return buf;
}

}  // namespace mathpipe

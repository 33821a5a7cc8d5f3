#include "mathpipe/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json_util.hpp"
#include "mathpipe/audit.hpp"
#include "mathpipe/corpus.hpp"
#include "mathpipe/eval.hpp"
#include "mathpipe/generation.hpp"
#include "mathpipe/planner.hpp"

namespace mathpipe {

namespace {

std::map<std::string, std::vector<const TraceRecord*>> traces_by_problem(
    const std::vector<TraceRecord>& traces) {
    std::map<std::string, std::vector<const TraceRecord*>> groups;
    for (const TraceRecord& trace : traces) groups[trace.problem_id].push_back(&trace);
    return groups;
}

}  // namespace

ReconcileOutcome reconcile_problems(const std::vector<ProblemRecord>& problems,
                                    const std::vector<TraceRecord>& high_traces, JudgeClient& judge) {
    const auto groups = traces_by_problem(high_traces);
    ReconcileOutcome outcome;
    for (const ProblemRecord& problem : problems) {
        std::vector<std::string> model_answers;
        if (auto it = groups.find(problem.id); it != groups.end()) {
            for (const TraceRecord* trace : it->second) {
                if (trace->final_answer) model_answers.push_back(*trace->final_answer);
            }
        }
        if (model_answers.empty()) {
            // Nothing to vote with; without a reliable reference the problem
            // cannot be rated or judged downstream.
            ProblemRecord removed = problem;
            removed.removed_reason = RemovedReason::NoAnswer;
            outcome.removed_no_answer.push_back(std::move(removed));
            continue;
        }
        const auto equiv = [&](const std::string& a, const std::string& b) {
            return judge.consistent(problem.question, a, b);
        };
        const ReconciledAnswer answer = reconcile_answer(problem.extracted_answer, model_answers, equiv);
        ProblemRecord reconciled = problem;
        reconciled.reference_answer = answer.value;
        reconciled.answer_provenance = answer.provenance;
        outcome.reconciled.push_back(std::move(reconciled));
    }
    return outcome;
}

RatingOutcome rate_problems(const std::vector<ProblemRecord>& problems,
                            const std::vector<TraceRecord>& low_traces, JudgeClient& judge) {
    const auto groups = traces_by_problem(low_traces);
    RatingOutcome outcome;
    for (const ProblemRecord& problem : problems) {
        auto it = groups.find(problem.id);
        if (it == groups.end() || it->second.empty()) {
            outcome.unrated.push_back(problem);
            continue;
        }
        std::vector<TraceRecord> traces;
        traces.reserve(it->second.size());
        for (const TraceRecord* trace : it->second) traces.push_back(*trace);
        traces = judge_traces(problem, std::move(traces), judge);
        outcome.rates.emplace(problem.id, compute_pass_rate(problem, traces));
        for (TraceRecord& trace : traces) outcome.judged_traces.push_back(std::move(trace));
    }
    return outcome;
}

std::vector<TraceRecord> judge_corpus(const std::vector<ProblemRecord>& problems,
                                      std::vector<TraceRecord> traces, JudgeClient& judge) {
    const auto index = index_problems(problems);
    for (TraceRecord& trace : traces) {
        auto it = index.find(trace.problem_id);
        if (it == index.end()) {
            raise(Errc::DanglingProblemRef,
                  "trace " + trace.id + " references unknown problem " + trace.problem_id);
        }
        const ProblemRecord& problem = *it->second;
        if (!problem.reference_answer) {
            raise(Errc::MissingReference, "problem " + problem.id + " has no reference answer");
        }
        if (!trace.final_answer) {
            trace.correct = false;
            continue;
        }
        try {
            trace.correct = judge.consistent(problem.question, *problem.reference_answer, *trace.final_answer);
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            raise(Errc::JudgeError, "trace " + trace.id + ": " + e.what());
        }
    }
    return traces;
}

BalanceOutcome balance_final_stage(const std::vector<TraceRecord>& traces, const BucketSpec& spec,
                                   const ModeMix& mix, std::uint64_t seed) {
    spec.validate();
    mix.validate();
    const int last_bucket = static_cast<int>(spec.bucket_count()) - 1;

    std::vector<TraceRecord> final_stage, medium_pool, low_pool;
    for (const TraceRecord& trace : traces) {
        if (trace.token_count > spec.max_context()) continue;  // excluded at packing
        const int bucket = assign_bucket(trace.token_count, spec);
        if (bucket == last_bucket) {
            final_stage.push_back(trace);
        } else if (trace.mode == Mode::Medium) {
            medium_pool.push_back(trace);
        } else if (trace.mode == Mode::Low) {
            low_pool.push_back(trace);
        }
    }

    const std::size_t natural = final_stage.size();
    const auto balanced = balance_modes(final_stage, medium_pool, low_pool, mix, seed);

    BalanceOutcome outcome;
    outcome.final_bucket_index = last_bucket;
    outcome.final_stage_trace_ids.reserve(balanced.size());
    for (const TraceRecord& trace : balanced) outcome.final_stage_trace_ids.push_back(trace.id);
    for (std::size_t i = natural; i < balanced.size(); ++i) {
        if (balanced[i].mode == Mode::Medium) ++outcome.sampled_medium;
        if (balanced[i].mode == Mode::Low) ++outcome.sampled_low;
    }
    return outcome;
}

std::string BalanceOutcome::to_json() const {
    ojson j;
    j["final_bucket_index"] = final_bucket_index;
    j["sampled_medium"] = sampled_medium;
    j["sampled_low"] = sampled_low;
    j["final_stage_trace_ids"] = final_stage_trace_ids;
    return j.dump(2) + "\n";
}

BalanceOutcome BalanceOutcome::from_json(const std::string& text) {
    const ojson j = jsonu::parse(text, Errc::ConfigError, "balance file");
    BalanceOutcome outcome;
    outcome.final_bucket_index =
        static_cast<int>(jsonu::require_int(j, "final_bucket_index", Errc::ConfigError, "balance file"));
    outcome.sampled_medium =
        static_cast<std::size_t>(jsonu::require_int(j, "sampled_medium", Errc::ConfigError, "balance file"));
    outcome.sampled_low =
        static_cast<std::size_t>(jsonu::require_int(j, "sampled_low", Errc::ConfigError, "balance file"));
    const ojson& ids = jsonu::require(j, "final_stage_trace_ids", Errc::ConfigError, "balance file");
    for (const ojson& id : ids) outcome.final_stage_trace_ids.push_back(id.get<std::string>());
    return outcome;
}

std::string pass_rates_to_jsonl(const std::vector<ProblemRecord>& problems,
                                const std::map<std::string, PassRate>& rates) {
    std::ostringstream out;
    for (const ProblemRecord& problem : problems) {
        auto it = rates.find(problem.id);
        if (it == rates.end()) continue;
        ojson j;
        j["problem_id"] = problem.id;
        j["correct_count"] = it->second.correct_count;
        j["total"] = it->second.total;
        j["rate"] = it->second.rate();
        out << j.dump() << "\n";
    }
    return out.str();
}

std::map<std::string, PassRate> pass_rates_from_jsonl(const std::string& text) {
    std::map<std::string, PassRate> rates;
    std::istringstream in(text);
    std::string line;
    std::int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string what = "pass-rate line " + std::to_string(line_no);
        const ojson j = jsonu::parse(line, Errc::MalformedRecord, what);
        PassRate rate;
        rate.correct_count = static_cast<int>(jsonu::require_int(j, "correct_count", Errc::MalformedRecord, what));
        rate.total = static_cast<int>(jsonu::require_int(j, "total", Errc::MalformedRecord, what));
        if (rate.total <= 0 || rate.correct_count < 0 || rate.correct_count > rate.total) {
            raise(Errc::MalformedRecord, what + ": invalid pass-rate counts");
        }
        rates[jsonu::require_string(j, "problem_id", Errc::MalformedRecord, what)] = rate;
    }
    return rates;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(Errc::FileNotFound, "cannot write " + path.string());
    out << text;
}

GenerationSpec stage_spec(const GenerationSpec& base, Mode mode, int total_samples) {
    GenerationSpec spec = base;
    spec.modes = {mode};
    const int per_config =
        (total_samples + static_cast<int>(spec.tools.size()) - 1) / static_cast<int>(spec.tools.size());
    spec.samples_per_config = std::max(1, per_config);
    return spec;
}

}  // namespace

PipelineOutcome run_pipeline(const PipelineConfig& config, const std::filesystem::path& output_dir,
                             std::ostream& log) {
    config.validate();
    std::filesystem::create_directories(output_dir);

    AuditLog audit;
    PipelineOutcome outcome;
    const ByteRatioTokenCounter counter;

    DeterministicMockClient mock;
    std::unique_ptr<HttpGeneratorClient> http_client;
    GeneratorClient* client = &mock;
    int max_in_flight = 8;
    if (config.endpoint) {
        http_client = std::make_unique<HttpGeneratorClient>(*config.endpoint);
        client = http_client.get();
        max_in_flight = config.endpoint->max_in_flight;
    }
    LocalComparatorJudge local_judge;
    std::unique_ptr<HttpJudgeClient> http_judge;
    JudgeClient* judge = &local_judge;
    if (config.endpoint && config.judge_prompt_path) {
        http_judge = std::make_unique<HttpJudgeClient>(*config.endpoint,
                                                       load_text_file(*config.judge_prompt_path));
        judge = http_judge.get();
    }

    // ingest
    auto ingest = read_problems(config.problems_path, config.max_errors);
    for (const LineError& err : ingest.errors) {
        audit.event("ingest_error", {{"message", err.message}});
    }
    std::vector<ProblemRecord> removed_problems;
    std::vector<ProblemRecord> active;
    for (ProblemRecord& problem : ingest.records) {
        if (problem.removed()) {
            removed_problems.push_back(std::move(problem));
        } else {
            active.push_back(std::move(problem));
        }
    }
    audit.event("ingest", {{"problems", std::to_string(active.size())},
                           {"pre_removed", std::to_string(removed_problems.size())},
                           {"errors", std::to_string(ingest.errors.size())}});
    log << "[ingest] " << active.size() << " problems\n";

    // decontaminate
    const auto benchmark = read_contamination_set(config.contamination_path);
    auto decontam = decontaminate(active, benchmark, config.curation);
    for (const ProblemRecord& removed : decontam.removed) {
        audit.removal(removed.id, RemovedReason::Decontaminated, "n-gram overlap with benchmark set");
        removed_problems.push_back(removed);
    }
    write_problems(output_dir / "problems_decontaminated.jsonl", decontam.retained);
    log << "[decontaminate] removed " << decontam.removed.size() << ", retained "
        << decontam.retained.size() << "\n";

    // reconcile (high-mode solutions)
    const GenerationSpec reconcile_spec =
        stage_spec(config.generation, Mode::High, config.curation.reconcile_samples);
    auto high_gen = run_generation(plan_generation(decontam.retained, reconcile_spec), *client, counter,
                                   max_in_flight);
    for (const GenerationFailure& failure : high_gen.failures) {
        audit.event("generation_failure", {{"trace", failure.job.trace_id()}, {"cause", failure.cause}});
        outcome.partial_generation_failure = true;
    }
    write_traces(output_dir / "traces_high.jsonl", high_gen.traces);
    auto reconciled = reconcile_problems(decontam.retained, high_gen.traces, *judge);
    for (const ProblemRecord& removed : reconciled.removed_no_answer) {
        audit.removal(removed.id, RemovedReason::NoAnswer, "no extracted answer and no model answers");
        removed_problems.push_back(removed);
    }
    write_problems(output_dir / "problems_reconciled.jsonl", reconciled.reconciled);
    log << "[reconcile] " << reconciled.reconciled.size() << " problems with reference answers\n";

    // rate (low-mode solutions)
    const GenerationSpec rating_spec =
        stage_spec(config.generation, Mode::Low, config.curation.rating_samples);
    auto low_gen = run_generation(plan_generation(reconciled.reconciled, rating_spec), *client, counter,
                                  max_in_flight);
    for (const GenerationFailure& failure : low_gen.failures) {
        audit.event("generation_failure", {{"trace", failure.job.trace_id()}, {"cause", failure.cause}});
        outcome.partial_generation_failure = true;
    }
    auto rating = rate_problems(reconciled.reconciled, low_gen.traces, *judge);
    write_traces(output_dir / "traces_low_rated.jsonl", rating.judged_traces);
    write_text(output_dir / "pass_rates.jsonl", pass_rates_to_jsonl(reconciled.reconciled, rating.rates));
    std::vector<ProblemRecord> rated;
    {
        std::unordered_set<std::string> unrated_ids;
        for (const ProblemRecord& problem : rating.unrated) unrated_ids.insert(problem.id);
        for (const ProblemRecord& problem : reconciled.reconciled) {
            if (unrated_ids.contains(problem.id)) {
                ProblemRecord removed = problem;
                removed.removed_reason = RemovedReason::NoAnswer;
                audit.removal(problem.id, RemovedReason::NoAnswer, "no rating traces generated");
                removed_problems.push_back(std::move(removed));
            } else {
                rated.push_back(problem);
            }
        }
    }
    log << "[rate] " << rating.rates.size() << " problems rated\n";

    // difficulty filter
    auto filtered = difficulty_filter(rated, rating.rates, config.curation.pass_rate_threshold);
    for (const ProblemRecord& removed : filtered.removed) {
        char detail[64];
        std::snprintf(detail, sizeof(detail), "pass rate %.4f > %.4f",
                      rating.rates.at(removed.id).rate(), config.curation.pass_rate_threshold);
        audit.removal(removed.id, RemovedReason::TooEasy, detail);
        removed_problems.push_back(removed);
    }
    write_problems(output_dir / "problems_retained.jsonl", filtered.retained);
    outcome.retained_problems = static_cast<int>(filtered.retained.size());
    log << "[filter] removed " << filtered.removed.size() << " too-easy, retained "
        << filtered.retained.size() << "\n";

    // full multi-mode generation + judging
    auto full_gen =
        run_generation(plan_generation(filtered.retained, config.generation), *client, counter, max_in_flight);
    for (const GenerationFailure& failure : full_gen.failures) {
        audit.event("generation_failure", {{"trace", failure.job.trace_id()}, {"cause", failure.cause}});
        outcome.partial_generation_failure = true;
    }
    auto judged = judge_corpus(filtered.retained, std::move(full_gen.traces), *judge);
    write_traces(output_dir / "traces_all.jsonl", judged);
    auto retained_traces = drop_incorrect_traces(judged);
    audit.event("drop_incorrect", {{"judged", std::to_string(judged.size())},
                                   {"retained", std::to_string(retained_traces.size())}});
    write_traces(output_dir / "traces_retained.jsonl", retained_traces);
    outcome.retained_traces = static_cast<int>(retained_traces.size());
    log << "[generate] " << judged.size() << " traces judged, " << retained_traces.size()
        << " retained\n";

    // stats
    const CorpusStats stats = compute_stats(filtered.retained, retained_traces, config.buckets, counter);
    write_text(output_dir / "stats.json", stats_to_json(stats, config.buckets));
    write_text(output_dir / "stats_tables.txt", render_mode_tool_table(stats) + "\n" +
                                                    render_bucket_table(stats, config.buckets));
    log << "[stats] " << stats.total << " traces\n";

    // mode balancing + packing
    const BalanceOutcome balance =
        balance_final_stage(retained_traces, config.buckets, config.mode_mix, config.seed);
    audit.event("balance", {{"final_bucket", std::to_string(balance.final_bucket_index)},
                            {"sampled_medium", std::to_string(balance.sampled_medium)},
                            {"sampled_low", std::to_string(balance.sampled_low)}});
    PackOptions pack_options;
    pack_options.final_stage_overrides = balance.final_stage_trace_ids;
    PackResult packed = pack_corpus(retained_traces, config.buckets, pack_options);
    packed.plan.mode_mix = config.mode_mix;
    for (const std::string& trace_id : packed.over_max_trace_ids) {
        audit.event("trace_over_max_context", {{"trace", trace_id}});
    }
    write_text(output_dir / "packing_plan.json", packed.plan.to_json());
    log << "[pack] buckets: ";
    for (const BucketPlan& bucket : packed.plan.buckets) log << bucket.sequences.size() << " ";
    log << "sequences\n";

    // schedule + cost
    const CostProfile profile = load_cost_profile(config.cost_profile);
    const ParallelismTable& table =
        config.parallelism_table.empty() ? profile.parallelism : config.parallelism_table;
    const Schedule schedule = build_schedule(packed.plan, table, profile.cost, config.mode_mix);
    outcome.stages = static_cast<int>(schedule.stages.size());
    write_text(output_dir / "schedule.json", schedule.to_json());
    std::string schedule_text = render_schedule_table(schedule);
    if (!schedule.stages.empty()) {
        const double speedup =
            compare_to_full_context(schedule, profile.cost, table.at(schedule.stages.back().bucket_ceiling));
        schedule_text += "\n" + render_speedup_line(speedup) + "\n";
    }
    write_text(output_dir / "schedule_table.txt", schedule_text);
    log << "[plan] " << schedule.stages.size() << " stages\n";

    // evaluation
    std::vector<EvalReport> reports;
    for (const EvalBenchmarkConfig& bench_config : config.eval_benchmarks) {
        const BenchmarkSet bench = BenchmarkSet::load(bench_config.path);
        std::vector<RunAnswer> answers;
        std::map<std::string, std::vector<RunAnswer>> answer_map;
        for (const BenchmarkProblem& problem : bench.problems) {
            for (int run = 0; run < bench.runs; ++run) {
                const std::string text =
                    client->generate(problem.question, bench_config.mode, bench_config.tool, run,
                                     config.generation.temperature, config.generation.top_p,
                                     config.generation.max_tokens);
                RunAnswer answer;
                answer.id = problem.id;
                answer.run = run;
                answer.answer = extract_final_answer(text);
                answers.push_back(answer);
                answer_map[problem.id].push_back(std::move(answer));
            }
        }
        write_answer_file((output_dir / ("answers_" + bench.name + ".jsonl")).string(), answers);
        EvalReport report = score_benchmark(bench, answer_map, nullptr);
        write_text(output_dir / ("eval_" + bench.name + ".json"), report.to_json());
        reports.push_back(std::move(report));
        audit.event("eval", {{"benchmark", bench.name}});
    }
    if (!reports.empty()) {
        write_text(output_dir / "eval_table.txt", render_eval_table(reports));
    }
    log << "[eval] " << reports.size() << " benchmarks\n";

    write_problems(output_dir / "problems_removed.jsonl", removed_problems);
    audit.write(output_dir / "audit.jsonl");
    return outcome;
}

}  // namespace mathpipe

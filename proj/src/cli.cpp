#include "mathpipe/cli.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "json_util.hpp"
#include "mathpipe/audit.hpp"
#include "mathpipe/corpus.hpp"
#include "mathpipe/curation.hpp"
#include "mathpipe/eval.hpp"
#include "mathpipe/generation.hpp"
#include "mathpipe/pipeline.hpp"
#include "mathpipe/planner.hpp"

namespace mathpipe::cli {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

Mode parse_mode(const std::string& raw) {
    const std::string m = lower(raw);
    if (m == "high") return Mode::High;
    if (m == "medium" || m == "med") return Mode::Medium;
    if (m == "low") return Mode::Low;
    raise(Errc::ConfigError, "unknown mode '" + raw + "' (expected high|medium|low)");
}

Tool parse_tool(const std::string& raw) {
    const std::string t = lower(raw);
    if (t == "pythontir" || t == "tir") return Tool::PythonTIR;
    if (t == "notir") return Tool::NoTIR;
    raise(Errc::ConfigError, "unknown tool '" + raw + "' (expected tir|notir)");
}

BucketSpec make_buckets(const std::vector<std::int64_t>& boundaries) {
    BucketSpec spec = boundaries.empty() ? BucketSpec::defaults() : BucketSpec{boundaries};
    spec.validate();
    return spec;
}

void flush_audit(const AuditLog& audit, const std::string& path) {
    if (!path.empty()) {
        audit.write(path);
    } else {
        for (const std::string& line : audit.lines()) std::cerr << line << "\n";
    }
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(Errc::FileNotFound, "cannot write " + path);
    out << text;
}

void report_read_errors(const std::vector<LineError>& errors, AuditLog& audit) {
    for (const LineError& err : errors) audit.event("read_error", {{"message", err.message}});
}

struct EndpointFlags {
    std::string url;
    std::string model;
    std::string auth_env;
    int max_in_flight = 8;
    int timeout_seconds = 120;
    int max_attempts = 3;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--endpoint-url", url, "chat-completion endpoint base URL (default: mock client)");
        cmd->add_option("--model", model, "model name sent to the endpoint");
        cmd->add_option("--auth-env", auth_env, "environment variable holding the bearer token");
        cmd->add_option("--max-in-flight", max_in_flight, "max concurrent requests")->check(CLI::PositiveNumber);
        cmd->add_option("--timeout", timeout_seconds, "request timeout in seconds");
        cmd->add_option("--attempts", max_attempts, "max attempts per request");
    }

    std::optional<EndpointConfig> to_config() const {
        if (url.empty()) return std::nullopt;
        EndpointConfig config;
        config.base_url = url;
        config.model = model;
        config.auth_env_var = auth_env;
        config.max_in_flight = max_in_flight;
        config.timeout_seconds = timeout_seconds;
        config.max_attempts = max_attempts;
        config.validate();
        return config;
    }
};

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"Curation, packing and curriculum planning for long-form reasoning trace corpora"};
    app.require_subcommand(1);

    // ---- ingest ----------------------------------------------------------
    struct IngestOpts {
        std::string kind = "problem";
        std::string input, output, audit_path;
        std::size_t max_errors = 0;
    };
    auto ingest = std::make_shared<IngestOpts>();
    {
        CLI::App* cmd = app.add_subcommand("ingest", "validate records and write them in canonical form");
        cmd->add_option("--kind", ingest->kind, "record kind: problem|trace")
            ->check(CLI::IsMember({"problem", "trace"}));
        cmd->add_option("--input", ingest->input, "input JSONL file")->required();
        cmd->add_option("--output", ingest->output, "output JSONL file")->required();
        cmd->add_option("--max-errors", ingest->max_errors, "tolerated bad records (default 0)");
        cmd->add_option("--audit", ingest->audit_path, "audit log path (default: stderr)");
        cmd->callback([ingest] {
            AuditLog audit;
            if (ingest->kind == "problem") {
                auto result = read_problems(ingest->input, ingest->max_errors);
                report_read_errors(result.errors, audit);
                write_problems(ingest->output, result.records);
                audit.event("ingest", {{"kind", "problem"},
                                       {"records", std::to_string(result.records.size())},
                                       {"errors", std::to_string(result.errors.size())}});
            } else {
                auto result = read_traces(ingest->input, ingest->max_errors);
                report_read_errors(result.errors, audit);
                write_traces(ingest->output, result.records);
                audit.event("ingest", {{"kind", "trace"},
                                       {"records", std::to_string(result.records.size())},
                                       {"errors", std::to_string(result.errors.size())}});
            }
            flush_audit(audit, ingest->audit_path);
        });
    }

    // ---- decontaminate ---------------------------------------------------
    struct DecontamOpts {
        std::string problems, benchmark, output, removed, audit_path;
        int ngram_size = 13;
        double threshold = 1e-9;
        std::size_t max_errors = 0;
    };
    auto decontam = std::make_shared<DecontamOpts>();
    {
        CLI::App* cmd = app.add_subcommand("decontaminate", "drop problems overlapping benchmark questions");
        cmd->add_option("--problems", decontam->problems)->required();
        cmd->add_option("--benchmark", decontam->benchmark, "JSONL of {id, question}")->required();
        cmd->add_option("--output", decontam->output, "retained problems")->required();
        cmd->add_option("--removed", decontam->removed, "removed problems (with removed_reason)");
        cmd->add_option("--ngram-size", decontam->ngram_size);
        cmd->add_option("--threshold", decontam->threshold, "n-gram overlap fraction triggering removal");
        cmd->add_option("--max-errors", decontam->max_errors);
        cmd->add_option("--audit", decontam->audit_path);
        cmd->callback([decontam] {
            AuditLog audit;
            auto problems = read_problems(decontam->problems, decontam->max_errors);
            report_read_errors(problems.errors, audit);
            CurationConfig cfg;
            cfg.ngram_size = decontam->ngram_size;
            cfg.ngram_overlap_threshold = decontam->threshold;
            auto split = decontaminate(problems.records, read_contamination_set(decontam->benchmark), cfg);
            for (const ProblemRecord& removed : split.removed) {
                audit.removal(removed.id, RemovedReason::Decontaminated, "n-gram overlap with benchmark set");
            }
            write_problems(decontam->output, split.retained);
            if (!decontam->removed.empty()) write_problems(decontam->removed, split.removed);
            flush_audit(audit, decontam->audit_path);
            std::cout << "retained " << split.retained.size() << ", removed " << split.removed.size()
                      << "\n";
        });
    }

    // ---- generate --------------------------------------------------------
    struct GenerateOpts {
        std::string problems, output, judge_against, audit_path;
        std::vector<std::string> modes = {"high", "medium", "low"};
        std::vector<std::string> tools = {"tir", "notir"};
        int samples = 8;
        double temperature = 1.0;
        double top_p = 1.0;
        std::int64_t max_tokens = 131072;
        std::size_t max_errors = 0;
        EndpointFlags endpoint;
    };
    auto generate = std::make_shared<GenerateOpts>();
    {
        CLI::App* cmd = app.add_subcommand("generate", "sample solution traces per (mode, tool, seed)");
        cmd->add_option("--problems", generate->problems)->required();
        cmd->add_option("--output", generate->output, "trace JSONL output")->required();
        cmd->add_option("--modes", generate->modes, "reasoning modes")->delimiter(',');
        cmd->add_option("--tools", generate->tools, "tool settings")->delimiter(',');
        cmd->add_option("--samples", generate->samples, "samples per (mode, tool) config");
        cmd->add_option("--temperature", generate->temperature);
        cmd->add_option("--top-p", generate->top_p);
        cmd->add_option("--max-tokens", generate->max_tokens);
        cmd->add_option("--judge-against", generate->judge_against,
                        "problems file with reference answers; sets `correct` on traces");
        cmd->add_option("--max-errors", generate->max_errors);
        cmd->add_option("--audit", generate->audit_path);
        generate->endpoint.add_to(cmd);
        cmd->callback([generate] {
            AuditLog audit;
            auto problems = read_problems(generate->problems, generate->max_errors);
            report_read_errors(problems.errors, audit);

            GenerationSpec spec;
            spec.modes.clear();
            for (const std::string& m : generate->modes) spec.modes.insert(parse_mode(m));
            spec.tools.clear();
            for (const std::string& t : generate->tools) spec.tools.insert(parse_tool(t));
            spec.samples_per_config = generate->samples;
            spec.temperature = generate->temperature;
            spec.top_p = generate->top_p;
            spec.max_tokens = generate->max_tokens;

            DeterministicMockClient mock;
            std::unique_ptr<HttpGeneratorClient> http;
            GeneratorClient* client = &mock;
            int in_flight = 8;
            if (auto cfg = generate->endpoint.to_config()) {
                http = std::make_unique<HttpGeneratorClient>(*cfg);
                client = http.get();
                in_flight = cfg->max_in_flight;
            }

            const ByteRatioTokenCounter counter;
            auto result =
                run_generation(plan_generation(problems.records, spec), *client, counter, in_flight);
            for (const GenerationFailure& failure : result.failures) {
                audit.event("generation_failure",
                            {{"trace", failure.job.trace_id()}, {"cause", failure.cause}});
            }

            if (!generate->judge_against.empty()) {
                auto refs = read_problems(generate->judge_against, generate->max_errors);
                LocalComparatorJudge judge;
                result.traces = judge_corpus(refs.records, std::move(result.traces), judge);
            }
            write_traces(generate->output, result.traces);
            audit.event("generate", {{"traces", std::to_string(result.traces.size())},
                                     {"failures", std::to_string(result.failures.size())}});
            flush_audit(audit, generate->audit_path);
            std::cout << result.traces.size() << " traces";
            if (!result.failures.empty()) std::cout << ", " << result.failures.size() << " failures";
            std::cout << "\n";
            if (result.partial_failure()) {
                raise(Errc::ClientError, std::to_string(result.failures.size()) + " generation jobs failed");
            }
        });
    }

    // ---- reconcile -------------------------------------------------------
    struct ReconcileOpts {
        std::string problems, traces, output, removed, audit_path;
        std::size_t max_errors = 0;
    };
    auto reconcile = std::make_shared<ReconcileOpts>();
    {
        CLI::App* cmd =
            app.add_subcommand("reconcile", "set reference answers from extracted + model answers");
        cmd->add_option("--problems", reconcile->problems)->required();
        cmd->add_option("--traces", reconcile->traces, "high-mode trace JSONL")->required();
        cmd->add_option("--output", reconcile->output, "problems with reference answers")->required();
        cmd->add_option("--removed", reconcile->removed, "problems removed for lack of any answer");
        cmd->add_option("--max-errors", reconcile->max_errors);
        cmd->add_option("--audit", reconcile->audit_path);
        cmd->callback([reconcile] {
            AuditLog audit;
            auto problems = read_problems(reconcile->problems, reconcile->max_errors);
            auto traces = read_traces(reconcile->traces, reconcile->max_errors);
            report_read_errors(problems.errors, audit);
            report_read_errors(traces.errors, audit);
            LocalComparatorJudge judge;
            auto outcome = reconcile_problems(problems.records, traces.records, judge);
            for (const ProblemRecord& removed : outcome.removed_no_answer) {
                audit.removal(removed.id, RemovedReason::NoAnswer,
                              "no extracted answer and no model answers");
            }
            write_problems(reconcile->output, outcome.reconciled);
            if (!reconcile->removed.empty()) write_problems(reconcile->removed, outcome.removed_no_answer);
            flush_audit(audit, reconcile->audit_path);
            std::cout << outcome.reconciled.size() << " problems reconciled\n";
        });
    }

    // ---- rate ------------------------------------------------------------
    struct RateOpts {
        std::string problems, traces, rates_out, judged_out, audit_path;
        std::size_t max_errors = 0;
    };
    auto rate = std::make_shared<RateOpts>();
    {
        CLI::App* cmd = app.add_subcommand("rate", "judge low-mode traces and compute pass rates");
        cmd->add_option("--problems", rate->problems, "problems with reference answers")->required();
        cmd->add_option("--traces", rate->traces, "low-mode trace JSONL")->required();
        cmd->add_option("--rates-out", rate->rates_out, "pass-rate JSONL output")->required();
        cmd->add_option("--judged-out", rate->judged_out, "judged trace JSONL output");
        cmd->add_option("--max-errors", rate->max_errors);
        cmd->add_option("--audit", rate->audit_path);
        cmd->callback([rate] {
            AuditLog audit;
            auto problems = read_problems(rate->problems, rate->max_errors);
            auto traces = read_traces(rate->traces, rate->max_errors);
            report_read_errors(problems.errors, audit);
            report_read_errors(traces.errors, audit);
            LocalComparatorJudge judge;
            auto outcome = rate_problems(problems.records, traces.records, judge);
            write_text(rate->rates_out, pass_rates_to_jsonl(problems.records, outcome.rates));
            if (!rate->judged_out.empty()) write_traces(rate->judged_out, outcome.judged_traces);
            audit.event("rate", {{"rated", std::to_string(outcome.rates.size())},
                                 {"unrated", std::to_string(outcome.unrated.size())}});
            flush_audit(audit, rate->audit_path);
            std::cout << outcome.rates.size() << " problems rated\n";
        });
    }

    // ---- filter ----------------------------------------------------------
    struct FilterOpts {
        std::string problems, rates, traces, output, removed, audit_path;
        double threshold = 0.8;
        bool drop_incorrect = false;
        std::size_t max_errors = 0;
    };
    auto filter = std::make_shared<FilterOpts>();
    {
        CLI::App* cmd = app.add_subcommand(
            "filter", "difficulty-filter problems by pass rate, or drop incorrect traces");
        cmd->add_option("--problems", filter->problems, "problems to difficulty-filter");
        cmd->add_option("--rates", filter->rates, "pass-rate JSONL from `rate`");
        cmd->add_option("--threshold", filter->threshold, "remove problems with rate > threshold");
        cmd->add_option("--traces", filter->traces, "judged traces (with --drop-incorrect)");
        cmd->add_flag("--drop-incorrect", filter->drop_incorrect, "retain only correct traces");
        cmd->add_option("--output", filter->output)->required();
        cmd->add_option("--removed", filter->removed, "removed problems output");
        cmd->add_option("--max-errors", filter->max_errors);
        cmd->add_option("--audit", filter->audit_path);
        cmd->callback([filter] {
            AuditLog audit;
            if (filter->drop_incorrect) {
                if (filter->traces.empty()) {
                    raise(Errc::ConfigError, "--drop-incorrect requires --traces");
                }
                auto traces = read_traces(filter->traces, filter->max_errors);
                report_read_errors(traces.errors, audit);
                auto retained = drop_incorrect_traces(traces.records);
                write_traces(filter->output, retained);
                audit.event("drop_incorrect", {{"judged", std::to_string(traces.records.size())},
                                               {"retained", std::to_string(retained.size())}});
                flush_audit(audit, filter->audit_path);
                std::cout << retained.size() << " of " << traces.records.size() << " traces retained\n";
                return;
            }
            if (filter->problems.empty() || filter->rates.empty()) {
                raise(Errc::ConfigError, "difficulty filtering requires --problems and --rates");
            }
            auto problems = read_problems(filter->problems, filter->max_errors);
            report_read_errors(problems.errors, audit);
            const auto rates = pass_rates_from_jsonl(load_text_file(filter->rates));
            auto split = difficulty_filter(problems.records, rates, filter->threshold);
            for (const ProblemRecord& removed : split.removed) {
                char detail[64];
                std::snprintf(detail, sizeof(detail), "pass rate %.4f > %.4f",
                              rates.at(removed.id).rate(), filter->threshold);
                audit.removal(removed.id, RemovedReason::TooEasy, detail);
            }
            write_problems(filter->output, split.retained);
            if (!filter->removed.empty()) write_problems(filter->removed, split.removed);
            flush_audit(audit, filter->audit_path);
            std::cout << "retained " << split.retained.size() << ", removed " << split.removed.size()
                      << "\n";
        });
    }

    // ---- bucket ----------------------------------------------------------
    struct BucketOpts {
        std::string traces, output, audit_path;
        std::vector<std::int64_t> boundaries;
        std::size_t max_errors = 0;
    };
    auto bucket = std::make_shared<BucketOpts>();
    {
        CLI::App* cmd = app.add_subcommand("bucket", "assign traces to context-length buckets");
        cmd->add_option("--traces", bucket->traces)->required();
        cmd->add_option("--boundaries", bucket->boundaries, "ascending token ceilings")->delimiter(',');
        cmd->add_option("--output", bucket->output, "assignment JSONL {trace_id, bucket}");
        cmd->add_option("--max-errors", bucket->max_errors);
        cmd->add_option("--audit", bucket->audit_path);
        cmd->callback([bucket] {
            AuditLog audit;
            const BucketSpec spec = make_buckets(bucket->boundaries);
            auto traces = read_traces(bucket->traces, bucket->max_errors);
            report_read_errors(traces.errors, audit);
            std::vector<std::int64_t> counts(spec.bucket_count(), 0);
            std::int64_t over_max = 0;
            std::ostringstream lines;
            for (const TraceRecord& trace : traces.records) {
                ojson j;
                j["trace_id"] = trace.id;
                if (trace.token_count > spec.max_context()) {
                    j["over_max"] = true;
                    ++over_max;
                    audit.event("trace_over_max_context", {{"trace", trace.id}});
                } else {
                    const int b = assign_bucket(trace.token_count, spec);
                    j["bucket"] = b;
                    ++counts[static_cast<std::size_t>(b)];
                }
                lines << j.dump() << "\n";
            }
            if (!bucket->output.empty()) write_text(bucket->output, lines.str());
            flush_audit(audit, bucket->audit_path);
            for (std::size_t b = 0; b < counts.size(); ++b) {
                std::cout << spec.label(b) << ": " << counts[b] << "\n";
            }
            if (over_max > 0) std::cout << "over max context: " << over_max << "\n";
        });
    }

    // ---- pack ------------------------------------------------------------
    struct PackOpts {
        std::string traces, output, balance, audit_path;
        std::vector<std::int64_t> boundaries;
        bool segregate = false;
        std::size_t max_errors = 0;
    };
    auto pack = std::make_shared<PackOpts>();
    {
        CLI::App* cmd = app.add_subcommand("pack", "first-fit-decreasing packing per bucket");
        cmd->add_option("--traces", pack->traces)->required();
        cmd->add_option("--boundaries", pack->boundaries)->delimiter(',');
        cmd->add_option("--output", pack->output, "packing plan JSON")->required();
        cmd->add_option("--balance", pack->balance, "balance JSON from `balance` (final-stage overrides)");
        cmd->add_flag("--segregate-modes", pack->segregate,
                      "never mix (mode, tool) settings within one sequence");
        cmd->add_option("--max-errors", pack->max_errors);
        cmd->add_option("--audit", pack->audit_path);
        cmd->callback([pack] {
            AuditLog audit;
            const BucketSpec spec = make_buckets(pack->boundaries);
            auto traces = read_traces(pack->traces, pack->max_errors);
            report_read_errors(traces.errors, audit);
            PackOptions options;
            options.segregate_modes = pack->segregate;
            if (!pack->balance.empty()) {
                const auto balance = BalanceOutcome::from_json(load_text_file(pack->balance));
                options.final_stage_overrides = balance.final_stage_trace_ids;
            }
            PackResult result = pack_corpus(traces.records, spec, options);
            for (const std::string& trace_id : result.over_max_trace_ids) {
                audit.event("trace_over_max_context", {{"trace", trace_id}});
            }
            write_text(pack->output, result.plan.to_json());
            audit.event("pack", {{"over_max", std::to_string(result.over_max_trace_ids.size())}});
            flush_audit(audit, pack->audit_path);
            for (const BucketPlan& b : result.plan.buckets) {
                std::cout << spec.label(static_cast<std::size_t>(b.bucket_index)) << ": "
                          << b.sequences.size() << " sequences, " << b.trace_count() << " traces\n";
            }
        });
    }

    // ---- balance ---------------------------------------------------------
    struct BalanceOpts {
        std::string traces, output, audit_path;
        std::vector<std::int64_t> boundaries;
        double fraction_medium = 0.10;
        double fraction_low = 0.10;
        std::uint64_t seed = 0;
        std::size_t max_errors = 0;
    };
    auto balance = std::make_shared<BalanceOpts>();
    {
        CLI::App* cmd =
            app.add_subcommand("balance", "sample medium/low traces into the final long-context stage");
        cmd->add_option("--traces", balance->traces)->required();
        cmd->add_option("--boundaries", balance->boundaries)->delimiter(',');
        cmd->add_option("--fraction-medium", balance->fraction_medium);
        cmd->add_option("--fraction-low", balance->fraction_low);
        cmd->add_option("--seed", balance->seed, "sampling seed")->required();
        cmd->add_option("--output", balance->output, "balance JSON")->required();
        cmd->add_option("--max-errors", balance->max_errors);
        cmd->add_option("--audit", balance->audit_path);
        cmd->callback([balance] {
            AuditLog audit;
            const BucketSpec spec = make_buckets(balance->boundaries);
            auto traces = read_traces(balance->traces, balance->max_errors);
            report_read_errors(traces.errors, audit);
            ModeMix mix{balance->fraction_medium, balance->fraction_low};
            const auto outcome = balance_final_stage(traces.records, spec, mix, balance->seed);
            write_text(balance->output, outcome.to_json());
            audit.event("balance", {{"final_bucket", std::to_string(outcome.final_bucket_index)},
                                    {"sampled_medium", std::to_string(outcome.sampled_medium)},
                                    {"sampled_low", std::to_string(outcome.sampled_low)}});
            flush_audit(audit, balance->audit_path);
            std::cout << "final stage: " << outcome.final_stage_trace_ids.size() << " traces (+"
                      << outcome.sampled_medium << " medium, +" << outcome.sampled_low << " low)\n";
        });
    }

    // ---- plan ------------------------------------------------------------
    struct PlanOpts {
        std::string plan, profile = "published", output, table_out;
        double fraction_medium = -1.0;
        double fraction_low = -1.0;
    };
    auto plan = std::make_shared<PlanOpts>();
    {
        CLI::App* cmd = app.add_subcommand("plan", "turn a packing plan into staged training manifests");
        cmd->add_option("--plan", plan->plan, "packing plan JSON")->required();
        cmd->add_option("--profile", plan->profile, "cost profile name or JSON path");
        cmd->add_option("--output", plan->output, "schedule JSON")->required();
        cmd->add_option("--table-out", plan->table_out, "rendered schedule table path");
        cmd->add_option("--fraction-medium", plan->fraction_medium, "final-stage mode mix override");
        cmd->add_option("--fraction-low", plan->fraction_low, "final-stage mode mix override");
        cmd->callback([plan] {
            const PackingPlan packing = PackingPlan::from_json(load_text_file(plan->plan));
            const CostProfile profile = load_cost_profile(plan->profile);
            std::optional<ModeMix> mix;
            if (plan->fraction_medium >= 0.0 || plan->fraction_low >= 0.0) {
                mix = ModeMix{std::max(plan->fraction_medium, 0.0), std::max(plan->fraction_low, 0.0)};
                mix->validate();
            }
            const Schedule schedule = build_schedule(packing, profile.parallelism, profile.cost, mix);
            write_text(plan->output, schedule.to_json());
            const std::string table = render_schedule_table(schedule);
            if (!plan->table_out.empty()) write_text(plan->table_out, table);
            std::cout << table;
        });
    }

    // ---- estimate --------------------------------------------------------
    struct EstimateOpts {
        std::string schedule, profile = "published", output;
    };
    auto estimate = std::make_shared<EstimateOpts>();
    {
        CLI::App* cmd =
            app.add_subcommand("estimate", "per-stage cost, total, and speedup vs full-context training");
        cmd->add_option("--schedule", estimate->schedule, "schedule JSON")->required();
        cmd->add_option("--profile", estimate->profile, "cost profile name or JSON path");
        cmd->add_option("--output", estimate->output, "cost breakdown JSON");
        cmd->callback([estimate] {
            const Schedule schedule = Schedule::from_json(load_text_file(estimate->schedule));
            const CostProfile profile = load_cost_profile(estimate->profile);
            const CostBreakdown breakdown = estimate_cost(schedule, profile.cost);

            std::optional<double> speedup;
            if (!profile.parallelism.empty() && !schedule.stages.empty()) {
                speedup = compare_to_full_context(schedule, profile.cost,
                                                  profile.parallelism.rbegin()->second);
            }

            ojson j;
            ojson stages = ojson::array();
            for (const auto& [bucket, seconds] : breakdown.per_stage_seconds) {
                stages.push_back({{"bucket_ceiling", bucket}, {"seconds", seconds}});
                std::cout << "stage " << bucket << ": " << seconds << " s\n";
            }
            j["per_stage"] = std::move(stages);
            j["total_seconds"] = breakdown.total_seconds;
            std::cout << "total: " << breakdown.total_seconds << " s\n";
            if (speedup) {
                j["speedup_vs_full_context"] = *speedup;
                std::cout << render_speedup_line(*speedup) << "\n";
            }
            if (!estimate->output.empty()) write_text(estimate->output, j.dump(2) + "\n");
        });
    }

    // ---- eval ------------------------------------------------------------
    struct EvalOpts {
        std::string benchmark, answers, answers_out, output, table_out;
        std::string mode = "high", tool = "notir";
        bool mock = false;
        double temperature = 1.0;
        double top_p = 1.0;
        std::int64_t max_tokens = 131072;
        EndpointFlags endpoint;
    };
    auto eval_opts = std::make_shared<EvalOpts>();
    {
        CLI::App* cmd = app.add_subcommand("eval", "score run answers as pass@1 and maj@k");
        cmd->add_option("--benchmark", eval_opts->benchmark, "benchmark set JSON")->required();
        cmd->add_option("--answers", eval_opts->answers, "answer JSONL {problem_id, run, answer}");
        cmd->add_flag("--mock", eval_opts->mock, "generate answers with the deterministic mock client");
        cmd->add_option("--answers-out", eval_opts->answers_out, "write generated answers here");
        cmd->add_option("--mode", eval_opts->mode);
        cmd->add_option("--tool", eval_opts->tool);
        cmd->add_option("--temperature", eval_opts->temperature);
        cmd->add_option("--top-p", eval_opts->top_p);
        cmd->add_option("--max-tokens", eval_opts->max_tokens);
        cmd->add_option("--output", eval_opts->output, "report JSON");
        cmd->add_option("--table-out", eval_opts->table_out);
        eval_opts->endpoint.add_to(cmd);
        cmd->callback([eval_opts] {
            const BenchmarkSet bench = BenchmarkSet::load(eval_opts->benchmark);
            std::vector<RunAnswer> answers;
            if (eval_opts->mock || !eval_opts->endpoint.url.empty()) {
                DeterministicMockClient mock;
                std::unique_ptr<HttpGeneratorClient> http;
                GeneratorClient* client = &mock;
                if (auto cfg = eval_opts->endpoint.to_config()) {
                    http = std::make_unique<HttpGeneratorClient>(*cfg);
                    client = http.get();
                }
                const Mode mode = parse_mode(eval_opts->mode);
                const Tool tool = parse_tool(eval_opts->tool);
                for (const BenchmarkProblem& problem : bench.problems) {
                    for (int run = 0; run < bench.runs; ++run) {
                        const std::string text =
                            client->generate(problem.question, mode, tool, run, eval_opts->temperature,
                                             eval_opts->top_p, eval_opts->max_tokens);
                        answers.push_back({problem.id, run, extract_final_answer(text)});
                    }
                }
                if (!eval_opts->answers_out.empty()) write_answer_file(eval_opts->answers_out, answers);
            } else if (!eval_opts->answers.empty()) {
                answers = read_answer_file(eval_opts->answers);
            } else {
                raise(Errc::ConfigError, "eval needs --answers or --mock");
            }

            std::map<std::string, std::vector<RunAnswer>> answer_map;
            for (const RunAnswer& answer : answers) answer_map[answer.id].push_back(answer);
            const EvalReport report = score_benchmark(bench, answer_map, nullptr);
            if (!eval_opts->output.empty()) write_text(eval_opts->output, report.to_json());
            const std::string table = render_eval_table({report});
            if (!eval_opts->table_out.empty()) write_text(eval_opts->table_out, table);
            std::cout << table;
        });
    }

    // ---- stats -----------------------------------------------------------
    struct StatsOpts {
        std::string problems, traces, json_out, tables_out;
        std::vector<std::int64_t> boundaries;
        std::size_t max_errors = 0;
    };
    auto stats = std::make_shared<StatsOpts>();
    {
        CLI::App* cmd = app.add_subcommand("stats", "corpus distribution by mode/tool/source and bucket");
        cmd->add_option("--problems", stats->problems)->required();
        cmd->add_option("--traces", stats->traces)->required();
        cmd->add_option("--boundaries", stats->boundaries)->delimiter(',');
        cmd->add_option("--json-out", stats->json_out);
        cmd->add_option("--tables-out", stats->tables_out);
        cmd->add_option("--max-errors", stats->max_errors);
        cmd->callback([stats] {
            const BucketSpec spec = make_buckets(stats->boundaries);
            auto problems = read_problems(stats->problems, stats->max_errors);
            auto traces = read_traces(stats->traces, stats->max_errors);
            const ByteRatioTokenCounter counter;
            const CorpusStats corpus_stats =
                compute_stats(problems.records, traces.records, spec, counter);
            const std::string tables = render_mode_tool_table(corpus_stats) + "\n" +
                                       render_bucket_table(corpus_stats, spec);
            if (!stats->json_out.empty()) write_text(stats->json_out, stats_to_json(corpus_stats, spec));
            if (!stats->tables_out.empty()) write_text(stats->tables_out, tables);
            std::cout << tables;
        });
    }

    // ---- pipeline ----------------------------------------------------------
    struct PipelineOpts {
        std::string config, output_dir;
        std::string problems_override, contamination_override, profile_override;
        std::int64_t seed_override = -1;
    };
    auto pipeline = std::make_shared<PipelineOpts>();
    {
        CLI::App* cmd = app.add_subcommand("pipeline", "run the full curation-to-planning chain");
        cmd->add_option("--config", pipeline->config, "pipeline config JSON")->required();
        cmd->add_option("--output-dir", pipeline->output_dir)->required();
        cmd->add_option("--problems", pipeline->problems_override, "override config problems path");
        cmd->add_option("--contamination", pipeline->contamination_override,
                        "override config contamination_set path");
        cmd->add_option("--profile", pipeline->profile_override, "override config cost_profile");
        cmd->add_option("--seed", pipeline->seed_override, "override config seed");
        cmd->callback([pipeline] {
            PipelineConfig config = PipelineConfig::load(pipeline->config);
            if (!pipeline->problems_override.empty()) config.problems_path = pipeline->problems_override;
            if (!pipeline->contamination_override.empty()) {
                config.contamination_path = pipeline->contamination_override;
            }
            if (!pipeline->profile_override.empty()) config.cost_profile = pipeline->profile_override;
            if (pipeline->seed_override >= 0) config.seed = static_cast<std::uint64_t>(pipeline->seed_override);
            const PipelineOutcome outcome = run_pipeline(config, pipeline->output_dir, std::cout);
            std::cout << "retained " << outcome.retained_problems << " problems, "
                      << outcome.retained_traces << " traces, " << outcome.stages << " stages\n";
            if (outcome.partial_generation_failure) {
                raise(Errc::ClientError, "some generation jobs failed (see audit log)");
            }
        });
    }

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        std::reverse(args.begin(), args.end());
        app.parse(std::move(args));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return (e.code() == Errc::ConfigError || e.code() == Errc::UnknownSubcommand) ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace mathpipe::cli

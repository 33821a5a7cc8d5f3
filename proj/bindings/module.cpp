#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "mathpipe/composition.hpp"
#include "mathpipe/corpus.hpp"
#include "mathpipe/curation.hpp"
#include "mathpipe/eval.hpp"
#include "mathpipe/generation.hpp"
#include "mathpipe/pipeline.hpp"
#include "mathpipe/planner.hpp"

namespace py = pybind11;
using namespace mathpipe;

namespace {

py::object json_to_py(const std::string& text) {
    return py::module_::import("json").attr("loads")(text);
}

BucketSpec spec_from_list(const std::vector<std::int64_t>& boundaries) {
    BucketSpec spec = boundaries.empty() ? BucketSpec::defaults() : BucketSpec{boundaries};
    spec.validate();
    return spec;
}

}  // namespace

PYBIND11_MODULE(_mathpipe, m) {
    m.doc() = "Curation, packing and curriculum planning for long-form reasoning trace corpora";

    py::register_exception<Error>(m, "Error");

    py::enum_<Source>(m, "Source")
        .value("AoPS", Source::AoPS)
        .value("StackExchangeMath", Source::StackExchangeMath)
        .value("Synthetic", Source::Synthetic);
    py::enum_<Mode>(m, "Mode")
        .value("High", Mode::High)
        .value("Medium", Mode::Medium)
        .value("Low", Mode::Low);
    py::enum_<Tool>(m, "Tool").value("PythonTIR", Tool::PythonTIR).value("NoTIR", Tool::NoTIR);
    py::enum_<AnswerProvenance>(m, "AnswerProvenance")
        .value("Extracted", AnswerProvenance::Extracted)
        .value("MajorityVote", AnswerProvenance::MajorityVote)
        .value("Replaced", AnswerProvenance::Replaced);
    py::enum_<RemovedReason>(m, "RemovedReason")
        .value("Decontaminated", RemovedReason::Decontaminated)
        .value("TooEasy", RemovedReason::TooEasy)
        .value("ProofStyle", RemovedReason::ProofStyle)
        .value("NoAnswer", RemovedReason::NoAnswer);

    py::class_<ProblemRecord>(m, "ProblemRecord")
        .def(py::init<>())
        .def_readwrite("id", &ProblemRecord::id)
        .def_readwrite("source", &ProblemRecord::source)
        .def_readwrite("question", &ProblemRecord::question)
        .def_readwrite("extracted_answer", &ProblemRecord::extracted_answer)
        .def_readwrite("reference_answer", &ProblemRecord::reference_answer)
        .def_readwrite("answer_provenance", &ProblemRecord::answer_provenance)
        .def_readwrite("removed_reason", &ProblemRecord::removed_reason)
        .def("__repr__", [](const ProblemRecord& p) { return "<ProblemRecord " + p.id + ">"; });

    py::class_<TraceRecord>(m, "TraceRecord")
        .def(py::init<>())
        .def_readwrite("id", &TraceRecord::id)
        .def_readwrite("problem_id", &TraceRecord::problem_id)
        .def_readwrite("mode", &TraceRecord::mode)
        .def_readwrite("tool", &TraceRecord::tool)
        .def_readwrite("seed", &TraceRecord::seed)
        .def_readwrite("text", &TraceRecord::text)
        .def_readwrite("final_answer", &TraceRecord::final_answer)
        .def_readwrite("token_count", &TraceRecord::token_count)
        .def_readwrite("correct", &TraceRecord::correct)
        .def("__repr__", [](const TraceRecord& t) { return "<TraceRecord " + t.id + ">"; });

    py::class_<PackedSequence>(m, "PackedSequence")
        .def_readonly("trace_ids", &PackedSequence::trace_ids)
        .def_readonly("total_tokens", &PackedSequence::total_tokens)
        .def_readonly("capacity", &PackedSequence::capacity)
        .def("fill_ratio", &PackedSequence::fill_ratio);

    py::class_<ReconciledAnswer>(m, "ReconciledAnswer")
        .def_readonly("value", &ReconciledAnswer::value)
        .def_readonly("provenance", &ReconciledAnswer::provenance)
        .def_readonly("support", &ReconciledAnswer::support);

    py::class_<PassRate>(m, "PassRate")
        .def_readonly("correct_count", &PassRate::correct_count)
        .def_readonly("total", &PassRate::total)
        .def("rate", &PassRate::rate);

    // record I/O
    m.def("read_problems",
          [](const std::string& path, std::size_t max_errors) {
              return read_problems(path, max_errors).records;
          },
          py::arg("path"), py::arg("max_errors") = 0);
    m.def("read_traces",
          [](const std::string& path, std::size_t max_errors) {
              return read_traces(path, max_errors).records;
          },
          py::arg("path"), py::arg("max_errors") = 0);
    m.def("write_problems",
          [](const std::string& path, const std::vector<ProblemRecord>& records) {
              write_problems(path, records);
          });
    m.def("write_traces", [](const std::string& path, const std::vector<TraceRecord>& records) {
        write_traces(path, records);
    });

    // answers and evaluation
    m.def("canonicalize_answer", [](const std::string& raw) { return canonicalize_answer(raw); });
    m.def("answers_equivalent",
          [](const std::string& a, const std::string& b) { return answers_equivalent(a, b); });
    m.def("majority_vote", &majority_vote);
    m.def("extract_final_answer", [](const std::string& text) { return extract_final_answer(text); });
    m.def(
        "score_benchmark",
        [](const std::string& name, const std::vector<std::tuple<std::string, std::string, std::string>>& problems,
           int k, int runs, const std::map<std::string, std::vector<std::optional<std::string>>>& answers) {
            BenchmarkSet bench;
            bench.name = name;
            bench.k = k;
            bench.runs = runs;
            for (const auto& [id, question, reference] : problems) {
                bench.problems.push_back({id, question, reference});
            }
            std::map<std::string, std::vector<RunAnswer>> run_answers;
            for (const auto& [id, answer_list] : answers) {
                for (std::size_t run = 0; run < answer_list.size(); ++run) {
                    run_answers[id].push_back({id, static_cast<int>(run), answer_list[run]});
                }
            }
            return json_to_py(score_benchmark(bench, run_answers, nullptr).to_json());
        },
        py::arg("name"), py::arg("problems"), py::arg("k"), py::arg("runs"), py::arg("answers"),
        "Score pass@1 and maj@k; answers maps problem id to run-ordered answers (None = missing).");

    // curation
    m.def(
        "reconcile_answer",
        [](const std::optional<std::string>& extracted, const std::vector<std::string>& model_answers) {
            return reconcile_answer(extracted, model_answers, [](const std::string& a, const std::string& b) {
                return answers_equivalent(a, b);
            });
        },
        py::arg("extracted"), py::arg("model_answers"));
    m.def("question_ngrams", &question_ngrams, py::arg("text"), py::arg("ngram_size"));
    m.def(
        "decontaminate",
        [](const std::vector<ProblemRecord>& problems,
           const std::vector<std::pair<std::string, std::string>>& benchmark, int ngram_size,
           double threshold) {
            CurationConfig cfg;
            cfg.ngram_size = ngram_size;
            cfg.ngram_overlap_threshold = threshold;
            std::vector<ContaminationQuestion> questions;
            for (const auto& [id, question] : benchmark) questions.push_back({id, question});
            auto split = decontaminate(problems, questions, cfg);
            return py::make_tuple(split.retained, split.removed);
        },
        py::arg("problems"), py::arg("benchmark"), py::arg("ngram_size") = 13,
        py::arg("threshold") = 1e-9);
    m.def(
        "difficulty_filter",
        [](const std::vector<ProblemRecord>& problems, const std::map<std::string, std::pair<int, int>>& rates,
           double threshold) {
            std::map<std::string, PassRate> pass_rates;
            for (const auto& [id, counts] : rates) pass_rates[id] = {counts.first, counts.second};
            auto split = difficulty_filter(problems, pass_rates, threshold);
            return py::make_tuple(split.retained, split.removed);
        },
        py::arg("problems"), py::arg("rates"), py::arg("threshold") = 0.8,
        "rates maps problem id to (correct_count, total).");
    m.def("drop_incorrect_traces", &drop_incorrect_traces);

    // composition
    m.def(
        "assign_bucket",
        [](std::int64_t token_count, const std::vector<std::int64_t>& boundaries) {
            return assign_bucket(token_count, spec_from_list(boundaries));
        },
        py::arg("token_count"), py::arg("boundaries") = std::vector<std::int64_t>{});
    m.def(
        "pack_sequences",
        [](const std::vector<std::pair<std::string, std::int64_t>>& items, std::int64_t capacity) {
            std::vector<PackItem> pack;
            for (const auto& [id, tokens] : items) pack.push_back({id, tokens});
            return pack_items(std::move(pack), capacity);
        },
        py::arg("items"), py::arg("capacity"), "items are (trace_id, token_count) pairs.");
    m.def(
        "balance_modes",
        [](const std::vector<TraceRecord>& final_stage, const std::vector<TraceRecord>& medium_pool,
           const std::vector<TraceRecord>& low_pool, double fraction_medium, double fraction_low,
           std::uint64_t seed) {
            return balance_modes(final_stage, medium_pool, low_pool, {fraction_medium, fraction_low}, seed);
        },
        py::arg("final_stage"), py::arg("medium_pool"), py::arg("low_pool"),
        py::arg("fraction_medium") = 0.10, py::arg("fraction_low") = 0.10, py::arg("seed") = 0);
    m.def("match_counts", &match_counts);
    m.def("mix_datasets", &mix_datasets, py::arg("dataset_a"), py::arg("dataset_b"), py::arg("seed"));
    m.def("replace_fraction", &replace_fraction, py::arg("base"), py::arg("pool"), py::arg("fraction"),
          py::arg("seed"));
    m.def(
        "pack_corpus",
        [](const std::vector<TraceRecord>& traces, const std::vector<std::int64_t>& boundaries,
           bool segregate_modes) {
            PackOptions options;
            options.segregate_modes = segregate_modes;
            auto result = pack_corpus(traces, spec_from_list(boundaries), options);
            return py::make_tuple(json_to_py(result.plan.to_json()), result.over_max_trace_ids);
        },
        py::arg("traces"), py::arg("boundaries") = std::vector<std::int64_t>{},
        py::arg("segregate_modes") = false);

    // stats
    m.def(
        "compute_stats",
        [](const std::vector<ProblemRecord>& problems, const std::vector<TraceRecord>& traces,
           const std::vector<std::int64_t>& boundaries) {
            const BucketSpec spec = spec_from_list(boundaries);
            const ByteRatioTokenCounter counter;
            return json_to_py(stats_to_json(compute_stats(problems, traces, spec, counter), spec));
        },
        py::arg("problems"), py::arg("traces"), py::arg("boundaries") = std::vector<std::int64_t>{});

    // planning
    m.def(
        "build_schedule",
        [](const py::object& packing_plan, const std::string& profile, double fraction_medium,
           double fraction_low) {
            const std::string plan_text =
                py::module_::import("json").attr("dumps")(packing_plan).cast<std::string>();
            const CostProfile cost_profile = load_cost_profile(profile);
            std::optional<ModeMix> mix;
            if (fraction_medium >= 0.0 || fraction_low >= 0.0) {
                mix = ModeMix{std::max(fraction_medium, 0.0), std::max(fraction_low, 0.0)};
            }
            const Schedule schedule = build_schedule(PackingPlan::from_json(plan_text),
                                                     cost_profile.parallelism, cost_profile.cost, mix);
            return json_to_py(schedule.to_json());
        },
        py::arg("packing_plan"), py::arg("profile") = "published", py::arg("fraction_medium") = -1.0,
        py::arg("fraction_low") = -1.0);
    m.def(
        "estimate_speedup",
        [](const py::object& schedule, const std::string& profile) {
            const std::string schedule_text =
                py::module_::import("json").attr("dumps")(schedule).cast<std::string>();
            const CostProfile cost_profile = load_cost_profile(profile);
            if (cost_profile.parallelism.empty()) {
                raise(Errc::MissingConfig, "profile has no parallelism table");
            }
            return compare_to_full_context(Schedule::from_json(schedule_text), cost_profile.cost,
                                           cost_profile.parallelism.rbegin()->second);
        },
        py::arg("schedule"), py::arg("profile") = "published");
    m.def("published_profile", [] { return json_to_py(profile_to_json(published_profile())); });

    // generation (deterministic mock)
    m.def(
        "mock_generate",
        [](const std::string& question, Mode mode, Tool tool, std::int64_t seed, std::int64_t max_tokens) {
            DeterministicMockClient client;
            return client.generate(question, mode, tool, seed, 1.0, 1.0, max_tokens);
        },
        py::arg("question"), py::arg("mode") = Mode::High, py::arg("tool") = Tool::NoTIR,
        py::arg("seed") = 0, py::arg("max_tokens") = 131072);
    m.def(
        "run_mock_generation",
        [](const std::vector<ProblemRecord>& problems, const std::set<Mode>& modes,
           const std::set<Tool>& tools, int samples_per_config, std::int64_t max_tokens) {
            GenerationSpec spec;
            spec.modes = modes;
            spec.tools = tools;
            spec.samples_per_config = samples_per_config;
            spec.max_tokens = max_tokens;
            DeterministicMockClient client;
            const ByteRatioTokenCounter counter;
            return run_generation(plan_generation(problems, spec), client, counter).traces;
        },
        py::arg("problems"), py::arg("modes") = std::set<Mode>{Mode::High, Mode::Medium, Mode::Low},
        py::arg("tools") = std::set<Tool>{Tool::PythonTIR, Tool::NoTIR}, py::arg("samples_per_config") = 8,
        py::arg("max_tokens") = 131072);
    m.def("token_count", [](const std::string& text) { return ByteRatioTokenCounter{}.count(text); });

    m.attr("__version__") = "0.1.0";
}

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mathpipe/generation_clients.hpp"
#include "mathpipe/types.hpp"

namespace mathpipe {

// Trims whitespace and surrounding math delimiters, then reduces simple
// numeric forms (integers, decimals, a/b, \frac{a}{b}) to a canonical
// rational string; anything unparseable comes back whitespace-normalized.
std::string canonicalize_answer(std::string_view raw);

// Equal canonical forms, or both parse numerically and agree within relative
// tolerance 1e-9. Symbolic equivalence (commuted expressions etc.) is out of
// scope for this local comparator; an external judge handles those.
bool answers_equivalent(std::string_view a, std::string_view b);

// Representative (canonical form) of the largest equivalence class; ties go
// to the smallest canonical form.
std::string majority_vote(const std::vector<std::string>& answers);

struct BenchmarkProblem {
    std::string id;
    std::string question;
    std::string reference_answer;
};

struct BenchmarkSet {
    std::string name;
    std::vector<BenchmarkProblem> problems;
    int k = 16;     // majority-vote width
    int runs = 16;  // independent samples per problem

    void validate() const;
    std::string to_json() const;
    static BenchmarkSet from_json(const std::string& text);
    static BenchmarkSet load(const std::string& path);
};

// One answer file line: {problem_id, run, answer}.
struct RunAnswer {
    std::string id;
    int run = 0;
    std::optional<std::string> answer;  // absent scores as incorrect
};

struct ProblemOutcome {
    std::vector<std::optional<std::string>> answers;  // run-indexed
    std::string majority;                             // canonical winner over the first k runs
    int correct_runs = 0;
    bool majority_correct = false;
};

struct EvalReport {
    std::string benchmark;
    int k = 0;
    int runs = 0;
    double pass_at_1 = 0.0;
    double maj_at_k = 0.0;
    std::map<std::string, ProblemOutcome> per_problem;

    std::string to_json() const;
};

// pass@1 = mean correctness over all (problem, run) cells; maj@k = fraction
// of problems whose majority answer over the first k runs is correct.
// Correctness uses answers_equivalent, or the judge when one is supplied.
EvalReport score_benchmark(const BenchmarkSet& benchmark,
                           const std::map<std::string, std::vector<RunAnswer>>& answers,
                           JudgeClient* judge = nullptr);

std::vector<RunAnswer> read_answer_file(const std::string& path);
void write_answer_file(const std::string& path, const std::vector<RunAnswer>& answers);

// One row per benchmark, formatted "pass@1 (maj@k)" in percent.
std::string render_eval_table(const std::vector<EvalReport>& reports);

}  // namespace mathpipe

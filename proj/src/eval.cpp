#include "mathpipe/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json_util.hpp"

namespace mathpipe {

namespace {

constexpr double kRelTolerance = 1e-9;
// Vote token for runs that produced no answer; compares below any real
// canonical form so a tie between missing and a real answer elects the
// real one.
const std::string kMissingSentinel = "\x01missing";

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

// Strips one layer of $...$, $$...$$, \(...\), \[...\] per iteration.
std::string strip_math_delimiters(std::string s) {
    for (;;) {
        s = trim(s);
        bool changed = false;
        auto strip_pair = [&](std::string_view open, std::string_view close) {
            if (s.size() >= open.size() + close.size() && s.starts_with(open) && s.ends_with(close)) {
                s = s.substr(open.size(), s.size() - open.size() - close.size());
                changed = true;
            }
        };
        strip_pair("$$", "$$");
        if (!changed) strip_pair("$", "$");
        if (!changed) strip_pair("\\(", "\\)");
        if (!changed) strip_pair("\\[", "\\]");
        if (!changed) return s;
    }
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_space = false;
    for (char c : s) {
        if (is_space(c)) {
            in_space = true;
            continue;
        }
        if (in_space && !out.empty()) out.push_back(' ');
        in_space = false;
        out.push_back(c);
    }
    return out;
}

struct Rational {
    long long num = 0;
    long long den = 1;  // > 0, reduced
};

constexpr long long kMagnitudeLimit = 1000000000000000000LL;  // 1e18

bool parse_ll(std::string_view s, std::size_t& pos, long long& out, bool allow_sign = true) {
    long long sign = 1;
    std::size_t p = pos;
    if (allow_sign && p < s.size() && (s[p] == '+' || s[p] == '-')) {
        if (s[p] == '-') sign = -1;
        ++p;
    }
    if (p >= s.size() || !std::isdigit(static_cast<unsigned char>(s[p]))) return false;
    long long value = 0;
    while (p < s.size() && std::isdigit(static_cast<unsigned char>(s[p]))) {
        if (value > kMagnitudeLimit / 10) return false;
        value = value * 10 + (s[p] - '0');
        ++p;
    }
    pos = p;
    out = sign * value;
    return true;
}

Rational reduce(long long num, long long den) {
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const long long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    return {num, den};
}

// Whole-string integer, decimal, a/b or \frac{a}{b} forms.
std::optional<Rational> parse_rational(std::string_view s) {
    if (s.empty()) return std::nullopt;

    // \frac{a}{b}, \dfrac, \tfrac
    if (s[0] == '\\') {
        std::size_t p = 1;
        if (p < s.size() && (s[p] == 'd' || s[p] == 't')) ++p;
        if (s.substr(p, 4) != "frac") return std::nullopt;
        p += 4;
        long long num = 0, den = 0;
        if (p >= s.size() || s[p] != '{') return std::nullopt;
        ++p;
        if (!parse_ll(s, p, num)) return std::nullopt;
        if (p >= s.size() || s[p] != '}') return std::nullopt;
        ++p;
        if (p >= s.size() || s[p] != '{') return std::nullopt;
        ++p;
        if (!parse_ll(s, p, den)) return std::nullopt;
        if (p >= s.size() || s[p] != '}' || p + 1 != s.size()) return std::nullopt;
        if (den == 0) return std::nullopt;
        return reduce(num, den);
    }

    // a/b
    if (s.find('/') != std::string_view::npos) {
        std::size_t p = 0;
        long long num = 0, den = 0;
        if (!parse_ll(s, p, num)) return std::nullopt;
        if (p >= s.size() || s[p] != '/') return std::nullopt;
        ++p;
        if (!parse_ll(s, p, den) || p != s.size()) return std::nullopt;
        if (den == 0) return std::nullopt;
        return reduce(num, den);
    }

    // integer or decimal
    std::size_t p = 0;
    long long sign = 1;
    if (p < s.size() && (s[p] == '+' || s[p] == '-')) {
        if (s[p] == '-') sign = -1;
        ++p;
    }
    long long whole = 0;
    bool any_digits = false;
    while (p < s.size() && std::isdigit(static_cast<unsigned char>(s[p]))) {
        if (whole > kMagnitudeLimit / 10) return std::nullopt;
        whole = whole * 10 + (s[p] - '0');
        ++p;
        any_digits = true;
    }
    if (p == s.size()) {
        if (!any_digits) return std::nullopt;
        return {Rational{sign * whole, 1}};
    }
    if (s[p] != '.') return std::nullopt;
    ++p;
    long long frac = 0, scale = 1;
    while (p < s.size() && std::isdigit(static_cast<unsigned char>(s[p]))) {
        if (scale > kMagnitudeLimit / 10 || whole > kMagnitudeLimit / 10) return std::nullopt;
        frac = frac * 10 + (s[p] - '0');
        scale *= 10;
        ++p;
        any_digits = true;
    }
    if (p != s.size() || !any_digits) return std::nullopt;
    if (whole > (kMagnitudeLimit - frac) / scale) return std::nullopt;
    return reduce(sign * (whole * scale + frac), scale);
}

std::string render_rational(const Rational& r) {
    if (r.den == 1) return std::to_string(r.num);
    return std::to_string(r.num) + "/" + std::to_string(r.den);
}

std::optional<double> numeric_value(std::string_view raw) {
    const std::string stripped = strip_math_delimiters(std::string(raw));
    if (auto r = parse_rational(stripped)) {
        return static_cast<double>(r->num) / static_cast<double>(r->den);
    }
    if (stripped.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(stripped.c_str(), &end);
    if (end != stripped.c_str() + stripped.size()) return std::nullopt;
    if (!std::isfinite(v)) return std::nullopt;
    return v;
}

}  // namespace

std::string canonicalize_answer(std::string_view raw) {
    const std::string stripped = strip_math_delimiters(std::string(raw));
    if (auto r = parse_rational(stripped)) return render_rational(*r);
    return collapse_whitespace(stripped);
}

bool answers_equivalent(std::string_view a, std::string_view b) {
    if (canonicalize_answer(a) == canonicalize_answer(b)) return true;
    const auto va = numeric_value(a);
    const auto vb = numeric_value(b);
    if (!va || !vb) return false;
    const double scale = std::max(std::abs(*va), std::abs(*vb));
    return std::abs(*va - *vb) <= kRelTolerance * scale;
}

namespace {

struct VoteClass {
    std::string canonical;  // smallest canonical form among members
    std::string member;     // one raw member, for equivalence probing
    int count = 0;
};

// Order-independent grouping: answers are classed in canonical-sorted order,
// so permutations of the input produce identical classes even though the
// tolerance branch of answers_equivalent is not transitive.
std::vector<VoteClass> group_answers(std::vector<std::string> answers) {
    std::sort(answers.begin(), answers.end(), [](const std::string& x, const std::string& y) {
        const std::string cx = canonicalize_answer(x), cy = canonicalize_answer(y);
        return cx != cy ? cx < cy : x < y;
    });
    std::vector<VoteClass> classes;
    for (const std::string& answer : answers) {
        bool placed = false;
        for (VoteClass& c : classes) {
            if (answers_equivalent(answer, c.member)) {
                ++c.count;
                placed = true;
                break;
            }
        }
        if (!placed) {
            classes.push_back({canonicalize_answer(answer), answer, 1});
        }
    }
    return classes;
}

const VoteClass* winning_class(const std::vector<VoteClass>& classes) {
    const VoteClass* best = nullptr;
    for (const VoteClass& c : classes) {
        if (!best || c.count > best->count || (c.count == best->count && c.canonical < best->canonical)) {
            best = &c;
        }
    }
    return best;
}

}  // namespace

std::string majority_vote(const std::vector<std::string>& answers) {
    if (answers.empty()) raise(Errc::EmptyAnswerList, "majority_vote needs at least one answer");
    return winning_class(group_answers(answers))->canonical;
}

void BenchmarkSet::validate() const {
    if (k < 1) raise(Errc::InvalidSpec, "benchmark k must be >= 1");
    if (runs < k) raise(Errc::InvalidSpec, "benchmark runs must be >= k");
    for (const BenchmarkProblem& p : problems) {
        if (p.id.empty()) raise(Errc::InvalidSpec, "benchmark problem with empty id");
    }
}

std::string BenchmarkSet::to_json() const {
    ojson j;
    j["name"] = name;
    j["k"] = k;
    j["runs"] = runs;
    j["problems"] = ojson::array();
    for (const BenchmarkProblem& p : problems) {
        j["problems"].push_back({{"id", p.id}, {"question", p.question}, {"reference_answer", p.reference_answer}});
    }
    return j.dump(2) + "\n";
}

BenchmarkSet BenchmarkSet::from_json(const std::string& text) {
    const ojson j = jsonu::parse(text, Errc::ConfigError, "benchmark set");
    BenchmarkSet set;
    set.name = jsonu::require_string(j, "name", Errc::ConfigError, "benchmark set");
    set.k = static_cast<int>(jsonu::require_int(j, "k", Errc::ConfigError, "benchmark set"));
    set.runs = static_cast<int>(jsonu::require_int(j, "runs", Errc::ConfigError, "benchmark set"));
    const ojson& problems = jsonu::require(j, "problems", Errc::ConfigError, "benchmark set");
    for (const ojson& p : problems) {
        BenchmarkProblem bp;
        bp.id = jsonu::require_string(p, "id", Errc::ConfigError, "benchmark problem");
        bp.question = jsonu::require_string(p, "question", Errc::ConfigError, "benchmark problem");
        bp.reference_answer = jsonu::require_string(p, "reference_answer", Errc::ConfigError, "benchmark problem");
        set.problems.push_back(std::move(bp));
    }
    set.validate();
    return set;
}

BenchmarkSet BenchmarkSet::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::FileNotFound, "cannot open benchmark set " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

EvalReport score_benchmark(const BenchmarkSet& benchmark,
                           const std::map<std::string, std::vector<RunAnswer>>& answers,
                           JudgeClient* judge) {
    benchmark.validate();
    for (const auto& [id, _] : answers) {
        const bool known = std::any_of(benchmark.problems.begin(), benchmark.problems.end(),
                                       [&](const BenchmarkProblem& p) { return p.id == id; });
        if (!known) raise(Errc::DanglingProblemRef, "answers reference unknown problem " + id);
    }

    EvalReport report;
    report.benchmark = benchmark.name;
    report.k = benchmark.k;
    report.runs = benchmark.runs;

    std::int64_t correct_cells = 0;
    std::int64_t majority_correct_count = 0;

    for (const BenchmarkProblem& problem : benchmark.problems) {
        ProblemOutcome outcome;
        outcome.answers.assign(static_cast<std::size_t>(benchmark.runs), std::nullopt);
        if (auto it = answers.find(problem.id); it != answers.end()) {
            for (const RunAnswer& ra : it->second) {
                if (ra.run < 0 || ra.run >= benchmark.runs) {
                    raise(Errc::RunCountMismatch,
                          "problem " + problem.id + " has run index " + std::to_string(ra.run) +
                              " outside 0.." + std::to_string(benchmark.runs - 1));
                }
                if (outcome.answers[static_cast<std::size_t>(ra.run)].has_value()) {
                    raise(Errc::RunCountMismatch,
                          "problem " + problem.id + " has duplicate run " + std::to_string(ra.run));
                }
                outcome.answers[static_cast<std::size_t>(ra.run)] = ra.answer;
            }
        }

        auto run_correct = [&](const std::optional<std::string>& answer) {
            if (!answer) return false;
            return judge ? judge->consistent(problem.question, problem.reference_answer, *answer)
                         : answers_equivalent(*answer, problem.reference_answer);
        };

        for (const auto& answer : outcome.answers) {
            if (run_correct(answer)) {
                ++outcome.correct_runs;
                ++correct_cells;
            }
        }

        // Majority over the first k runs; missing answers vote as a shared
        // sentinel class that loses ties against real answers.
        std::vector<std::string> present;
        int missing = 0;
        for (int run = 0; run < benchmark.k; ++run) {
            const auto& answer = outcome.answers[static_cast<std::size_t>(run)];
            if (answer) {
                present.push_back(*answer);
            } else {
                ++missing;
            }
        }
        if (present.empty()) {
            outcome.majority = kMissingSentinel;
            outcome.majority_correct = false;
        } else {
            const auto classes = group_answers(present);
            const VoteClass* best = winning_class(classes);
            if (missing > best->count) {
                outcome.majority = kMissingSentinel;
                outcome.majority_correct = false;
            } else {
                outcome.majority = best->canonical;
                outcome.majority_correct = run_correct(best->canonical);
            }
        }
        if (outcome.majority_correct) ++majority_correct_count;
        report.per_problem.emplace(problem.id, std::move(outcome));
    }

    const std::size_t n = benchmark.problems.size();
    report.pass_at_1 = n == 0 ? 0.0
                              : static_cast<double>(correct_cells) /
                                    (static_cast<double>(n) * static_cast<double>(benchmark.runs));
    report.maj_at_k = n == 0 ? 0.0 : static_cast<double>(majority_correct_count) / static_cast<double>(n);
    return report;
}

std::string EvalReport::to_json() const {
    ojson j;
    j["benchmark"] = benchmark;
    j["k"] = k;
    j["runs"] = runs;
    j["pass_at_1"] = pass_at_1;
    j["maj_at_k"] = maj_at_k;
    ojson per = ojson::object();
    for (const auto& [id, outcome] : per_problem) {
        ojson o;
        ojson answer_list = ojson::array();
        for (const auto& answer : outcome.answers) {
            if (answer) {
                answer_list.push_back(*answer);
            } else {
                answer_list.push_back(nullptr);
            }
        }
        o["answers"] = std::move(answer_list);
        o["majority"] = outcome.majority == kMissingSentinel ? ojson(nullptr) : ojson(outcome.majority);
        o["correct_runs"] = outcome.correct_runs;
        o["majority_correct"] = outcome.majority_correct;
        per[id] = std::move(o);
    }
    j["per_problem"] = std::move(per);
    return j.dump(2) + "\n";
}

std::vector<RunAnswer> read_answer_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::FileNotFound, "cannot open answer file " + path);
    std::vector<RunAnswer> out;
    std::string line;
    std::int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const ojson j = jsonu::parse(line, Errc::MalformedRecord,
                                     "answer file line " + std::to_string(line_no));
        RunAnswer ra;
        ra.id = jsonu::require_string(j, "problem_id", Errc::MalformedRecord,
                                      "answer file line " + std::to_string(line_no));
        ra.run = static_cast<int>(jsonu::require_int(j, "run", Errc::MalformedRecord,
                                                     "answer file line " + std::to_string(line_no)));
        if (auto it = j.find("answer"); it != j.end() && !it->is_null()) {
            ra.answer = it->get<std::string>();
        }
        out.push_back(std::move(ra));
    }
    return out;
}

void write_answer_file(const std::string& path, const std::vector<RunAnswer>& answers) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(Errc::FileNotFound, "cannot write answer file " + path);
    for (const RunAnswer& ra : answers) {
        ojson j;
        j["problem_id"] = ra.id;
        j["run"] = ra.run;
        j["answer"] = ra.answer ? ojson(*ra.answer) : ojson(nullptr);
        out << j.dump() << "\n";
    }
}

std::string render_eval_table(const std::vector<EvalReport>& reports) {
    std::size_t name_width = std::string("Benchmark").size();
    for (const EvalReport& r : reports) name_width = std::max(name_width, r.benchmark.size());

    std::ostringstream out;
    out << std::left;
    out.width(static_cast<std::streamsize>(name_width + 2));
    out << "Benchmark";
    out << "pass@1 (maj@k)\n";
    for (const EvalReport& r : reports) {
        char cell[64];
        std::snprintf(cell, sizeof(cell), "%.2f (%.2f)", r.pass_at_1 * 100.0, r.maj_at_k * 100.0);
        out.width(static_cast<std::streamsize>(name_width + 2));
        out << r.benchmark;
        out << cell << "\n";
    }
    return out.str();
}

}  // namespace mathpipe

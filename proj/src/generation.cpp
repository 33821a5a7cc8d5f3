#include "mathpipe/generation.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "mathpipe/curation.hpp"
#include "mathpipe/eval.hpp"
#include "mathpipe/rng.hpp"

namespace mathpipe {

namespace {

std::string mode_slug(Mode mode) {
    switch (mode) {
        case Mode::High: return "high";
        case Mode::Medium: return "med";
        case Mode::Low: return "low";
    }
    return "?";
}

std::string tool_slug(Tool tool) { return tool == Tool::PythonTIR ? "tir" : "notir"; }

}  // namespace

std::string GenerationJob::trace_id() const {
    return problem_id + "/" + mode_slug(mode) + "-" + tool_slug(tool) + "-s" + std::to_string(seed);
}

std::vector<GenerationJob> plan_generation(const std::vector<ProblemRecord>& problems,
                                           const GenerationSpec& spec) {
    spec.validate();
    if (problems.empty()) raise(Errc::EmptyProblemSet, "generation plan needs at least one problem");

    std::vector<const ProblemRecord*> ordered;
    ordered.reserve(problems.size());
    for (const ProblemRecord& p : problems) ordered.push_back(&p);
    std::sort(ordered.begin(), ordered.end(),
              [](const ProblemRecord* a, const ProblemRecord* b) { return a->id < b->id; });

    std::vector<GenerationJob> jobs;
    jobs.reserve(ordered.size() * spec.modes.size() * spec.tools.size() *
                 static_cast<std::size_t>(spec.samples_per_config));
    for (const ProblemRecord* problem : ordered) {
        for (Mode mode : spec.modes) {
            for (Tool tool : spec.tools) {
                for (int seed = 0; seed < spec.samples_per_config; ++seed) {
                    GenerationJob job;
                    job.problem_id = problem->id;
                    job.question = problem->question;
                    job.mode = mode;
                    job.tool = tool;
                    job.seed = seed;
                    job.temperature = spec.temperature;
                    job.top_p = spec.top_p;
                    job.max_tokens = spec.max_tokens;
                    jobs.push_back(std::move(job));
                }
            }
        }
    }
    return jobs;
}

GenerationResult run_generation(const std::vector<GenerationJob>& jobs, GeneratorClient& client,
                                const TokenCounter& counter, int max_in_flight) {
    if (max_in_flight < 1) raise(Errc::InvalidSpec, "max_in_flight must be >= 1");

    struct Slot {
        std::optional<TraceRecord> trace;
        std::optional<std::string> failure;
    };
    std::vector<Slot> slots(jobs.size());
    std::atomic<std::size_t> cursor{0};

    auto worker = [&] {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= jobs.size()) return;
            const GenerationJob& job = jobs[i];
            try {
                TraceRecord trace;
                trace.id = job.trace_id();
                trace.problem_id = job.problem_id;
                trace.mode = job.mode;
                trace.tool = job.tool;
                trace.seed = job.seed;
                trace.text = client.generate(job.question, job.mode, job.tool, job.seed, job.temperature,
                                             job.top_p, job.max_tokens);
                trace.final_answer = extract_final_answer(trace.text);
                trace.token_count = counter.count(trace.text);
                slots[i].trace = std::move(trace);
            } catch (const std::exception& e) {
                slots[i].failure = e.what();
            }
        }
    };

    const std::size_t thread_count =
        std::min<std::size_t>(static_cast<std::size_t>(max_in_flight), std::max<std::size_t>(jobs.size(), 1));
    std::vector<std::thread> threads;
    threads.reserve(thread_count);
    for (std::size_t t = 0; t < thread_count; ++t) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();

    // Slots are already in job order, so completion order never shows.
    GenerationResult result;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (slots[i].trace) {
            result.traces.push_back(std::move(*slots[i].trace));
        } else {
            result.failures.push_back({jobs[i], slots[i].failure.value_or("unknown error")});
        }
    }
    return result;
}

std::vector<TraceRecord> judge_traces(const ProblemRecord& problem, std::vector<TraceRecord> traces,
                                      JudgeClient& judge) {
    if (!problem.reference_answer) {
        raise(Errc::MissingReference, "problem " + problem.id + " has no reference answer");
    }
    for (TraceRecord& trace : traces) {
        if (!trace.final_answer) {
            trace.correct = false;
            continue;
        }
        try {
            trace.correct = judge.consistent(problem.question, *problem.reference_answer, *trace.final_answer);
        } catch (const std::exception& e) {
            raise(Errc::JudgeError, "trace " + trace.id + ": " + e.what());
        }
    }
    return traces;
}

bool LocalComparatorJudge::consistent(const std::string&, const std::string& expected_answer,
                                      const std::string& candidate_answer) {
    return answers_equivalent(candidate_answer, expected_answer);
}

namespace {

constexpr const char* kFillerWords[] = {
    "consider",  "the",        "integer",   "sequence",   "modulo",     "argument",  "follows",
    "from",      "symmetry",   "because",   "each",       "term",       "satisfies", "recurrence",
    "hence",     "bounding",   "sum",       "yields",     "estimate",   "apply",     "induction",
    "over",      "cases",      "partition", "remainder",  "expanding",  "binomial",  "coefficient",
    "gives",     "identity",   "therefore", "substitution", "reduces",  "equation",  "roots",
    "polynomial", "factor",    "prime",     "divisor",    "count",      "lattice",   "distinct",
    "verify",    "numeric",    "check",     "confirms",   "value",      "finally",   "simplify"};
constexpr std::size_t kFillerWordCount = sizeof(kFillerWords) / sizeof(kFillerWords[0]);

std::uint64_t job_hash(const std::string& question, Mode mode, Tool tool, std::int64_t seed) {
    std::uint64_t h = fnv1a64(question);
    h = fnv1a64(to_string(mode), h);
    h = fnv1a64(to_string(tool), h);
    h = fnv1a64(std::to_string(seed), h);
    return h;
}

// Exact decimal rendering of num/den when den divides a small power of ten.
std::optional<std::string> exact_decimal(long long num, long long den) {
    long long scale = 1;
    for (int digits = 1; digits <= 3; ++digits) {
        scale *= 10;
        if (scale % den == 0) {
            const long long scaled = num * (scale / den);
            std::string whole = std::to_string(std::abs(scaled) / scale);
            std::string frac = std::to_string(std::abs(scaled) % scale);
            frac.insert(frac.begin(), static_cast<std::size_t>(digits) - frac.size(), '0');
            while (frac.size() > 1 && frac.back() == '0') frac.pop_back();
            return (scaled < 0 ? "-" : "") + whole + "." + frac;
        }
    }
    return std::nullopt;
}

struct MockAnswer {
    long long num = 0;
    long long den = 1;

    std::string render(DetRng& rng) const {
        if (den == 1) return std::to_string(num);
        if (rng.below(2) == 0) {
            if (auto dec = exact_decimal(num, den)) return *dec;
        }
        return std::to_string(num) + "/" + std::to_string(den);
    }
};

MockAnswer ideal_answer_parts(const std::string& question) {
    const std::uint64_t h = fnv1a64(question);
    MockAnswer answer;
    if (h % 100 < 80) {
        answer.num = static_cast<long long>((h / 100) % 1000);
        answer.den = 1;
    } else {
        static constexpr long long kDens[] = {2, 3, 4, 5, 7, 8};
        answer.num = 1 + static_cast<long long>((h / 100) % 9);
        answer.den = kDens[(h / 1000) % 6];
        const long long g = std::gcd(answer.num, answer.den);
        answer.num /= g;
        answer.den /= g;
    }
    return answer;
}

double question_difficulty(const std::string& question) {
    return static_cast<double>((fnv1a64(question) >> 17) % 1000) / 999.0;
}

}  // namespace

std::string DeterministicMockClient::ideal_answer(const std::string& question) {
    const MockAnswer answer = ideal_answer_parts(question);
    if (answer.den == 1) return std::to_string(answer.num);
    return std::to_string(answer.num) + "/" + std::to_string(answer.den);
}

double DeterministicMockClient::solve_probability(const std::string& question, Mode mode, Tool tool) {
    const double d = question_difficulty(question);
    double p = 0.0;
    switch (mode) {
        case Mode::High: p = 0.98 - 0.55 * d; break;
        case Mode::Medium: p = 0.92 - 0.65 * d; break;
        case Mode::Low: p = 0.97 - 0.92 * d; break;
    }
    if (tool == Tool::PythonTIR) p += 0.02;
    return std::clamp(p, 0.01, 0.995);
}

std::string DeterministicMockClient::generate(const std::string& question, Mode mode, Tool tool,
                                              std::int64_t seed, double /*temperature*/, double /*top_p*/,
                                              std::int64_t max_tokens) {
    DetRng rng(job_hash(question, mode, tool, seed));

    const double p = solve_probability(question, mode, tool);
    const double draw = rng.unit();
    enum class Outcome { Correct, NoAnswer, Wrong } outcome;
    if (draw < p) {
        outcome = Outcome::Correct;
    } else if (draw < p + 0.04) {
        outcome = Outcome::NoAnswer;
    } else {
        outcome = Outcome::Wrong;
    }

    double base = 0.0;
    switch (mode) {
        case Mode::High: base = 1350.0; break;
        case Mode::Medium: base = 620.0; break;
        case Mode::Low: base = 260.0; break;
    }
    const double u = rng.unit();
    double factor = 0.0;
    if (u < 0.60) {
        factor = 0.5 + 0.8 * (u / 0.60);
    } else if (u < 0.90) {
        factor = 1.3 + 1.2 * ((u - 0.60) / 0.30);
    } else if (u < 0.99) {
        factor = 2.5 + 2.0 * ((u - 0.90) / 0.09);
    } else {
        factor = 4.5 + 2.5 * ((u - 0.99) / 0.01);
    }
    // Filler can overshoot the target by one sentence plus the closing line;
    // the 96-token margin keeps the trace under max_tokens.
    const std::int64_t target_tokens =
        std::max<std::int64_t>(48, std::min<std::int64_t>(static_cast<std::int64_t>(base * factor),
                                                          max_tokens - 96));
    const std::size_t target_bytes = static_cast<std::size_t>(target_tokens) * 4;

    std::ostringstream text;
    text << "Problem: " << question.substr(0, 160) << "\n";
    text << "Reasoning (" << mode_slug(mode) << ", " << (tool == Tool::PythonTIR ? "python" : "no tool")
         << ", seed " << seed << ").\n";

    std::size_t sentence = 0;
    std::string body;
    while (body.size() + static_cast<std::size_t>(text.tellp()) < target_bytes) {
        const std::size_t words = 8 + rng.below(9);
        for (std::size_t w = 0; w < words; ++w) {
            body += kFillerWords[rng.below(kFillerWordCount)];
            body.push_back(w + 1 == words ? '.' : ' ');
        }
        body.push_back('\n');
        ++sentence;
        if (tool == Tool::PythonTIR && sentence % 7 == 3) {
            body += "```python\nresult = check(" + std::to_string(rng.below(1000)) +
                    ")\nprint(result)\n```\n";
        }
    }
    text << body;

    const MockAnswer ideal = ideal_answer_parts(question);
    switch (outcome) {
        case Outcome::Correct: {
            MockAnswer answer = ideal;
            text << "Thus the final answer is \\boxed{" << answer.render(rng) << "}.\n";
            break;
        }
        case Outcome::Wrong: {
            MockAnswer wrong = ideal;
            wrong.num += 1 + static_cast<long long>(rng.below(3));
            text << "Thus the final answer is \\boxed{" << wrong.render(rng) << "}.\n";
            break;
        }
        case Outcome::NoAnswer:
            text << "The attempt stalls here without reaching a final closed form.\n";
            break;
    }
    return text.str();
}

void EndpointConfig::validate() const {
    if (base_url.empty()) raise(Errc::ConfigError, "endpoint base_url must be set");
    if (max_in_flight < 1) raise(Errc::ConfigError, "endpoint max_in_flight must be >= 1");
    if (timeout_seconds < 1) raise(Errc::ConfigError, "endpoint timeout_seconds must be >= 1");
    if (max_attempts < 1) raise(Errc::ConfigError, "endpoint max_attempts must be >= 1");
}

namespace {

std::string reasoning_effort(Mode mode) {
    switch (mode) {
        case Mode::High: return "high";
        case Mode::Medium: return "medium";
        case Mode::Low: return "low";
    }
    return "high";
}

// POSTs one chat completion and returns the first choice's content, with
// bounded exponential-backoff retries on transport errors and 5xx/429.
std::string post_chat(const EndpointConfig& config, const nlohmann::json& body) {
    config.validate();
    httplib::Client client(config.base_url);
    client.set_connection_timeout(config.timeout_seconds, 0);
    client.set_read_timeout(config.timeout_seconds, 0);
    client.set_write_timeout(config.timeout_seconds, 0);

    httplib::Headers headers;
    if (!config.auth_env_var.empty()) {
        const char* token = std::getenv(config.auth_env_var.c_str());
        if (!token) {
            raise(Errc::ClientError, "auth env var " + config.auth_env_var + " is not set");
        }
        headers.emplace("Authorization", std::string("Bearer ") + token);
    }

    const std::string payload = body.dump();
    std::string last_error;
    int backoff_ms = config.backoff_initial_ms;
    for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms *= 2;
        }
        auto res = client.Post("/v1/chat/completions", headers, payload, "application/json");
        if (!res) {
            const auto err = res.error();
            if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
                err == httplib::Error::Write) {
                last_error = "timeout: " + httplib::to_string(err);
            } else {
                last_error = "transport: " + httplib::to_string(err);
            }
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "http status " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            raise(Errc::ClientError, "http status " + std::to_string(res->status) + ": " + res->body);
        }
        const auto reply = nlohmann::json::parse(res->body, nullptr, false);
        if (reply.is_discarded() || !reply.contains("choices") || reply["choices"].empty()) {
            raise(Errc::ClientError, "malformed completion response");
        }
        const auto& message = reply["choices"][0]["message"];
        if (!message.contains("content") || !message["content"].is_string()) {
            raise(Errc::ClientError, "completion response has no message content");
        }
        return message["content"].get<std::string>();
    }
    if (last_error.rfind("timeout", 0) == 0) {
        raise(Errc::Timeout, last_error + " after " + std::to_string(config.max_attempts) + " attempts");
    }
    raise(Errc::ClientError, last_error + " after " + std::to_string(config.max_attempts) + " attempts");
}

}  // namespace

HttpGeneratorClient::HttpGeneratorClient(EndpointConfig config) : config_(std::move(config)) {
    config_.validate();
}

std::string HttpGeneratorClient::generate(const std::string& question, Mode mode, Tool tool,
                                          std::int64_t seed, double temperature, double top_p,
                                          std::int64_t max_tokens) {
    nlohmann::json body;
    body["model"] = config_.model;
    body["messages"] = nlohmann::json::array();
    body["messages"].push_back(
        {{"role", "system"},
         {"content", tool == Tool::PythonTIR
                         ? "Solve the problem, interleaving python code blocks for computation. "
                           "Put the final answer in \\boxed{}."
                         : "Solve the problem in natural language without code execution. "
                           "Put the final answer in \\boxed{}."}});
    body["messages"].push_back({{"role", "user"}, {"content", question}});
    body["temperature"] = temperature;
    body["top_p"] = top_p;
    body["max_tokens"] = max_tokens;
    body["seed"] = seed;
    body["reasoning_effort"] = reasoning_effort(mode);
    return post_chat(config_, body);
}

HttpJudgeClient::HttpJudgeClient(EndpointConfig config, std::string prompt_template)
    : config_(std::move(config)), template_(std::move(prompt_template)) {
    config_.validate();
}

bool HttpJudgeClient::consistent(const std::string& question, const std::string& expected_answer,
                                 const std::string& candidate_answer) {
    nlohmann::json body;
    body["model"] = config_.model;
    body["messages"] = nlohmann::json::array();
    body["messages"].push_back(
        {{"role", "user"}, {"content", fill_judge_template(template_, question, expected_answer, candidate_answer)}});
    body["temperature"] = 0.0;
    const std::string reply = post_chat(config_, body);
    const auto verdict = parse_yes_no(reply);
    if (!verdict) raise(Errc::JudgeError, "judge reply has no yes/no token: " + reply.substr(0, 120));
    return *verdict;
}

std::string fill_judge_template(const std::string& tmpl, const std::string& question,
                                const std::string& expected_answer, const std::string& candidate_answer) {
    std::string out = tmpl;
    const std::pair<std::string, const std::string*> slots[] = {
        {"{question}", &question},
        {"{expected_answer}", &expected_answer},
        {"{candidate_answer}", &candidate_answer},
    };
    for (const auto& [placeholder, value] : slots) {
        for (std::size_t pos = out.find(placeholder); pos != std::string::npos;
             pos = out.find(placeholder, pos + value->size())) {
            out.replace(pos, placeholder.size(), *value);
        }
    }
    return out;
}

std::optional<bool> parse_yes_no(std::string_view reply) {
    std::string token;
    for (std::size_t i = 0; i <= reply.size(); ++i) {
        const bool is_alpha = i < reply.size() && std::isalpha(static_cast<unsigned char>(reply[i])) != 0;
        if (is_alpha) {
            token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(reply[i]))));
            continue;
        }
        if (token == "yes") return true;
        if (token == "no") return false;
        token.clear();
    }
    return std::nullopt;
}

std::string load_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::FileNotFound, "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace mathpipe

#include "mathpipe/curation.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "json_util.hpp"
#include "mathpipe/eval.hpp"

namespace mathpipe {

void CurationConfig::validate() const {
    if (!(pass_rate_threshold > 0.0 && pass_rate_threshold <= 1.0)) {
        raise(Errc::InvalidSpec, "pass_rate_threshold must be in (0, 1]");
    }
    if (rating_samples < 1) raise(Errc::InvalidSpec, "rating_samples must be >= 1");
    if (reconcile_samples < 1) raise(Errc::InvalidSpec, "reconcile_samples must be >= 1");
    if (ngram_size < 1) raise(Errc::InvalidSpec, "ngram_size must be >= 1");
    if (ngram_overlap_threshold <= 0.0) raise(Errc::InvalidSpec, "ngram_overlap_threshold must be > 0");
}

std::optional<std::string> extract_final_answer(std::string_view text) {
    constexpr std::string_view kMarker = "\\boxed{";
    std::size_t last = std::string_view::npos;
    for (std::size_t pos = text.find(kMarker); pos != std::string_view::npos;
         pos = text.find(kMarker, pos + 1)) {
        last = pos;
    }
    if (last == std::string_view::npos) return std::nullopt;

    std::size_t p = last + kMarker.size();
    int depth = 1;
    std::string content;
    while (p < text.size()) {
        const char c = text[p];
        if (c == '{') {
            ++depth;
        } else if (c == '}') {
            if (--depth == 0) return content;
        }
        content.push_back(c);
        ++p;
    }
    return std::nullopt;  // unbalanced marker
}

ReconciledAnswer reconcile_answer(const std::optional<std::string>& extracted,
                                  const std::vector<std::string>& model_answers,
                                  const EquivPredicate& equiv) {
    if (model_answers.empty()) {
        raise(Errc::EmptyModelAnswers, "reconciliation needs at least one model answer");
    }

    if (extracted) {
        int support = 0;
        for (const std::string& answer : model_answers) {
            if (equiv(*extracted, answer)) ++support;
        }
        if (support >= 1) return {*extracted, AnswerProvenance::Extracted, support};
    }

    // Majority among model answers, grouped by the same predicate; answers
    // are classed in canonical-sorted order so the result is independent of
    // input order, and ties resolve to the smallest canonical form.
    std::vector<std::string> sorted = model_answers;
    std::sort(sorted.begin(), sorted.end(), [](const std::string& x, const std::string& y) {
        const std::string cx = canonicalize_answer(x), cy = canonicalize_answer(y);
        return cx != cy ? cx < cy : x < y;
    });
    struct Class {
        std::string canonical;
        std::string member;
        int count = 0;
    };
    std::vector<Class> classes;
    for (const std::string& answer : sorted) {
        bool placed = false;
        for (Class& c : classes) {
            if (equiv(answer, c.member)) {
                ++c.count;
                placed = true;
                break;
            }
        }
        if (!placed) classes.push_back({canonicalize_answer(answer), answer, 1});
    }
    const Class* best = &classes.front();
    for (const Class& c : classes) {
        if (c.count > best->count || (c.count == best->count && c.canonical < best->canonical)) best = &c;
    }
    return {best->member, extracted ? AnswerProvenance::Replaced : AnswerProvenance::MajorityVote,
            best->count};
}

PassRate compute_pass_rate(const ProblemRecord& problem, const std::vector<TraceRecord>& low_mode_traces) {
    if (low_mode_traces.empty()) {
        raise(Errc::NoLowModeTraces, "problem " + problem.id + " has no rating traces");
    }
    PassRate rate;
    for (const TraceRecord& trace : low_mode_traces) {
        if (trace.mode != Mode::Low) {
            raise(Errc::NoLowModeTraces,
                  "trace " + trace.id + " is not a low-mode rating trace for problem " + problem.id);
        }
        if (!trace.correct.has_value()) {
            raise(Errc::UnjudgedTrace, "trace " + trace.id + " has no correctness verdict");
        }
        ++rate.total;
        if (*trace.correct) ++rate.correct_count;
    }
    return rate;
}

ProblemSplit difficulty_filter(const std::vector<ProblemRecord>& problems,
                               const std::map<std::string, PassRate>& rates, double threshold) {
    ProblemSplit split;
    for (const ProblemRecord& problem : problems) {
        auto it = rates.find(problem.id);
        if (it == rates.end()) {
            raise(Errc::MissingPassRate, "problem " + problem.id + " has no pass rate");
        }
        if (it->second.rate() > threshold) {
            ProblemRecord removed = problem;
            removed.removed_reason = RemovedReason::TooEasy;
            split.removed.push_back(std::move(removed));
        } else {
            split.retained.push_back(problem);
        }
    }
    return split;
}

std::vector<TraceRecord> drop_incorrect_traces(const std::vector<TraceRecord>& traces) {
    std::vector<TraceRecord> retained;
    for (const TraceRecord& trace : traces) {
        if (!trace.correct.has_value()) {
            raise(Errc::UnjudgedTrace, "trace " + trace.id + " has no correctness verdict");
        }
        if (*trace.correct) retained.push_back(trace);
    }
    return retained;
}

namespace {

std::vector<std::string> normalized_words(std::string_view text) {
    std::vector<std::string> words;
    std::string current;
    for (char c : text) {
        const unsigned char u = static_cast<unsigned char>(c);
        if (std::isalnum(u)) {
            current.push_back(static_cast<char>(std::tolower(u)));
        } else if (!current.empty()) {
            words.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) words.push_back(std::move(current));
    return words;
}

std::string join_words(const std::vector<std::string>& words, std::size_t begin, std::size_t count) {
    std::string gram;
    for (std::size_t i = begin; i < begin + count; ++i) {
        if (i > begin) gram.push_back(' ');
        gram += words[i];
    }
    return gram;
}

}  // namespace

std::vector<std::string> question_ngrams(std::string_view text, int ngram_size) {
    const auto words = normalized_words(text);
    const std::size_t n = static_cast<std::size_t>(ngram_size);
    std::vector<std::string> grams;
    if (words.empty()) return grams;
    if (words.size() < n) {
        // Short questions contribute their full word sequence, so an exact
        // duplicate of a short benchmark item still collides.
        grams.push_back(join_words(words, 0, words.size()));
        return grams;
    }
    grams.reserve(words.size() - n + 1);
    for (std::size_t i = 0; i + n <= words.size(); ++i) {
        grams.push_back(join_words(words, i, n));
    }
    return grams;
}

DecontaminationVerdict contamination_verdict(const std::string& question,
                                             const std::unordered_set<std::string>& benchmark_ngrams,
                                             const CurationConfig& cfg) {
    const auto grams = question_ngrams(question, cfg.ngram_size);
    DecontaminationVerdict verdict;
    if (grams.empty()) return verdict;
    std::size_t hits = 0;
    for (const std::string& gram : grams) {
        if (benchmark_ngrams.contains(gram)) ++hits;
    }
    verdict.overlap = static_cast<double>(hits) / static_cast<double>(grams.size());
    verdict.removed = verdict.overlap >= cfg.ngram_overlap_threshold;
    return verdict;
}

ProblemSplit decontaminate(const std::vector<ProblemRecord>& problems,
                           const std::vector<ContaminationQuestion>& benchmark,
                           const CurationConfig& cfg) {
    cfg.validate();
    if (benchmark.empty()) raise(Errc::EmptyBenchmark, "decontamination benchmark set is empty");

    std::unordered_set<std::string> benchmark_ngrams;
    for (const ContaminationQuestion& q : benchmark) {
        for (std::string& gram : question_ngrams(q.question, cfg.ngram_size)) {
            benchmark_ngrams.insert(std::move(gram));
        }
    }

    ProblemSplit split;
    for (const ProblemRecord& problem : problems) {
        const auto verdict = contamination_verdict(problem.question, benchmark_ngrams, cfg);
        if (verdict.removed) {
            ProblemRecord removed = problem;
            removed.removed_reason = RemovedReason::Decontaminated;
            split.removed.push_back(std::move(removed));
        } else {
            split.retained.push_back(problem);
        }
    }
    return split;
}

std::vector<ContaminationQuestion> read_contamination_set(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::FileNotFound, "cannot open benchmark file " + path);
    std::vector<ContaminationQuestion> out;
    std::string line;
    std::int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string what = "benchmark line " + std::to_string(line_no);
        const ojson j = jsonu::parse(line, Errc::MalformedRecord, what);
        ContaminationQuestion q;
        q.id = jsonu::require_string(j, "id", Errc::MalformedRecord, what);
        q.question = jsonu::require_string(j, "question", Errc::MalformedRecord, what);
        out.push_back(std::move(q));
    }
    return out;
}

ProblemSplit flag_proof_style(const std::vector<ProblemRecord>& problems, const ProblemPredicate& is_proof) {
    ProblemSplit split;
    for (const ProblemRecord& problem : problems) {
        if (is_proof && is_proof(problem)) {
            ProblemRecord removed = problem;
            removed.removed_reason = RemovedReason::ProofStyle;
            split.removed.push_back(std::move(removed));
        } else {
            split.retained.push_back(problem);
        }
    }
    return split;
}

}  // namespace mathpipe

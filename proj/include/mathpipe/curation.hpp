#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "mathpipe/types.hpp"

namespace mathpipe {

struct ReconciledAnswer {
    std::string value;
    AnswerProvenance provenance = AnswerProvenance::Extracted;
    int support = 0;  // model solutions consistent with `value`
};

struct PassRate {
    int correct_count = 0;
    int total = 0;

    double rate() const { return static_cast<double>(correct_count) / static_cast<double>(total); }
};

struct CurationConfig {
    double pass_rate_threshold = 0.8;
    int rating_samples = 16;     // low-mode solutions per problem
    int reconcile_samples = 16;  // high-mode solutions per problem
    int ngram_size = 13;
    // Fraction of a problem's n-grams that must appear in the benchmark pool
    // before the problem is dropped. The default is an epsilon: any single
    // overlapping n-gram triggers removal.
    double ngram_overlap_threshold = 1e-9;

    void validate() const;
};

// Content of the last \boxed{...} marker, nullopt when there is none (or the
// last marker is unbalanced).
std::optional<std::string> extract_final_answer(std::string_view text);

using EquivPredicate = std::function<bool(const std::string&, const std::string&)>;

// Reference-answer reconciliation:
//   no extracted answer            -> majority of model answers (MajorityVote)
//   >=1 model answer consistent    -> keep the extracted answer (Extracted)
//   all model answers disagree     -> majority of model answers (Replaced)
// Majority groups model answers with `equiv`; ties break by smallest
// canonical form.
ReconciledAnswer reconcile_answer(const std::optional<std::string>& extracted,
                                  const std::vector<std::string>& model_answers,
                                  const EquivPredicate& equiv);

// Fraction of judged-correct traces among a problem's rating (low-mode)
// solutions. Every trace must arrive judged.
PassRate compute_pass_rate(const ProblemRecord& problem, const std::vector<TraceRecord>& low_mode_traces);

struct ProblemSplit {
    std::vector<ProblemRecord> retained;
    std::vector<ProblemRecord> removed;  // removed_reason set
};

// Removes problems with rate strictly above the threshold, tagging them
// TooEasy. A rate of exactly the threshold is retained.
ProblemSplit difficulty_filter(const std::vector<ProblemRecord>& problems,
                               const std::map<std::string, PassRate>& rates, double threshold);

// Keeps exactly the traces judged correct.
std::vector<TraceRecord> drop_incorrect_traces(const std::vector<TraceRecord>& traces);

struct ContaminationQuestion {
    std::string id;
    std::string question;
};

// Word n-grams of the normalized text (lowercased, punctuation stripped,
// whitespace collapsed). Texts shorter than n words contribute their full
// word sequence as a single gram, so exact duplicates always collide.
std::vector<std::string> question_ngrams(std::string_view text, int ngram_size);

struct DecontaminationVerdict {
    double overlap = 0.0;  // fraction of the problem's n-grams found in the benchmark pool
    bool removed = false;
};

// A problem is dropped (tagged Decontaminated) when the fraction of its
// question n-grams that appear in any benchmark question's n-gram set
// reaches cfg.ngram_overlap_threshold.
ProblemSplit decontaminate(const std::vector<ProblemRecord>& problems,
                           const std::vector<ContaminationQuestion>& benchmark, const CurationConfig& cfg);
DecontaminationVerdict contamination_verdict(const std::string& question,
                                             const std::unordered_set<std::string>& benchmark_ngrams,
                                             const CurationConfig& cfg);

std::vector<ContaminationQuestion> read_contamination_set(const std::string& path);

// Optional proof-style screen: callers supply the predicate (a classifier
// model is out of scope here); matching problems are tagged ProofStyle.
using ProblemPredicate = std::function<bool(const ProblemRecord&)>;
ProblemSplit flag_proof_style(const std::vector<ProblemRecord>& problems, const ProblemPredicate& is_proof);

}  // namespace mathpipe

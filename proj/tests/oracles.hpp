// Test-only oracles, deliberately independent of the library implementations
// they check: exhaustive bin packing, literal rule transcriptions, and naive
// recomputation with linear scans instead of the library's data structures.
#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace oracle {

// Minimum bin count by exhaustive placement (feasible for <= 8 items).
inline int optimal_bin_count_rec(const std::vector<std::int64_t>& items, std::size_t next,
                                 std::vector<std::int64_t>& bins, std::int64_t capacity, int best) {
    if (static_cast<int>(bins.size()) >= best) return best;
    if (next == items.size()) return static_cast<int>(bins.size());
    for (std::size_t b = 0; b < bins.size(); ++b) {
        if (bins[b] + items[next] <= capacity) {
            bins[b] += items[next];
            best = optimal_bin_count_rec(items, next + 1, bins, capacity, best);
            bins[b] -= items[next];
        }
    }
    bins.push_back(items[next]);
    best = optimal_bin_count_rec(items, next + 1, bins, capacity, best);
    bins.pop_back();
    return best;
}

inline int optimal_bin_count(std::vector<std::int64_t> items, std::int64_t capacity) {
    if (items.empty()) return 0;
    std::sort(items.begin(), items.end(), std::greater<>());
    std::vector<std::int64_t> bins;
    return optimal_bin_count_rec(items, 0, bins, capacity, static_cast<int>(items.size()));
}

// Literal transcription of the three-branch reconciliation rule with exact
// string equality: no extracted answer -> majority; extracted matched by at
// least one model answer -> extracted; otherwise -> majority. Majority is the
// most frequent answer, ties to the lexicographically smallest.
struct ReconcileExpectation {
    std::string value;
    std::string provenance;  // "Extracted" | "MajorityVote" | "Replaced"
    int support = 0;
};

inline ReconcileExpectation brute_force_reconcile(const std::optional<std::string>& extracted,
                                                  const std::vector<std::string>& answers) {
    if (extracted) {
        int matches = 0;
        for (const std::string& a : answers) {
            if (a == *extracted) ++matches;
        }
        if (matches >= 1) return {*extracted, "Extracted", matches};
    }
    std::map<std::string, int> freq;
    for (const std::string& a : answers) ++freq[a];
    std::string best;
    int best_count = -1;
    for (const auto& [value, count] : freq) {  // std::map iterates in sorted order
        if (count > best_count) {
            best = value;
            best_count = count;
        }
    }
    return {best, extracted ? "Replaced" : "MajorityVote", best_count};
}

// Independent text normalizer + n-gram extractor for decontamination checks.
inline std::vector<std::string> naive_ngrams(const std::string& text, int n) {
    std::string normalized;
    for (char c : text) {
        const unsigned char u = static_cast<unsigned char>(c);
        normalized.push_back(std::isalnum(u) ? static_cast<char>(std::tolower(u)) : ' ');
    }
    std::vector<std::string> words;
    std::string word;
    for (char c : normalized) {
        if (c == ' ') {
            if (!word.empty()) words.push_back(word);
            word.clear();
        } else {
            word.push_back(c);
        }
    }
    if (!word.empty()) words.push_back(word);

    std::vector<std::string> grams;
    if (words.empty()) return grams;
    const std::size_t size = std::min<std::size_t>(static_cast<std::size_t>(n), words.size());
    for (std::size_t i = 0; i + size <= words.size(); ++i) {
        std::string gram = words[i];
        for (std::size_t k = 1; k < size; ++k) gram += " " + words[i + k];
        grams.push_back(gram);
    }
    return grams;
}

inline bool brute_force_decontaminated(const std::string& question,
                                       const std::vector<std::string>& benchmark_questions, int n,
                                       double threshold) {
    const auto grams = naive_ngrams(question, n);
    if (grams.empty()) return false;
    int hits = 0;
    for (const std::string& gram : grams) {
        bool found = false;
        for (const std::string& bench : benchmark_questions) {
            for (const std::string& bg : naive_ngrams(bench, n)) {
                if (bg == gram) {
                    found = true;
                    break;
                }
            }
            if (found) break;
        }
        if (found) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(grams.size()) >= threshold;
}

// Minimal independent rational parser for the canonicalizer fixture:
// integers, decimals, a/b, \frac{a}{b}. Returns the reduced canonical string.
inline std::optional<std::string> fraction_oracle(std::string raw) {
    auto strip = [&](const std::string& open, const std::string& close) {
        while (raw.size() >= open.size() + close.size() && raw.substr(0, open.size()) == open &&
               raw.substr(raw.size() - close.size()) == close) {
            raw = raw.substr(open.size(), raw.size() - open.size() - close.size());
        }
    };
    auto trim = [&] {
        while (!raw.empty() && std::isspace(static_cast<unsigned char>(raw.front()))) raw.erase(raw.begin());
        while (!raw.empty() && std::isspace(static_cast<unsigned char>(raw.back()))) raw.pop_back();
    };
    trim();
    for (int i = 0; i < 4; ++i) {
        strip("$$", "$$");
        strip("$", "$");
        strip("\\(", "\\)");
        strip("\\[", "\\]");
        trim();
    }

    long long num = 0, den = 1;
    char rest = 0;
    long long a = 0, b = 0;
    if (std::sscanf(raw.c_str(), "\\frac{%lld}{%lld}%c", &a, &b, &rest) == 2 ||
        std::sscanf(raw.c_str(), "\\dfrac{%lld}{%lld}%c", &a, &b, &rest) == 2 ||
        std::sscanf(raw.c_str(), "\\tfrac{%lld}{%lld}%c", &a, &b, &rest) == 2 ||
        std::sscanf(raw.c_str(), "%lld/%lld%c", &a, &b, &rest) == 2) {
        if (b == 0) return std::nullopt;
        num = a;
        den = b;
    } else {
        // integer or decimal
        std::size_t dot = raw.find('.');
        bool ok = !raw.empty();
        std::string digits;
        for (std::size_t i = 0; i < raw.size(); ++i) {
            if (i == 0 && (raw[i] == '+' || raw[i] == '-')) continue;
            if (i == dot) continue;
            if (!std::isdigit(static_cast<unsigned char>(raw[i]))) ok = false;
        }
        if (!ok) return std::nullopt;
        std::string mantissa = raw;
        int frac_digits = 0;
        if (dot != std::string::npos) {
            frac_digits = static_cast<int>(raw.size() - dot - 1);
            mantissa = raw.substr(0, dot) + raw.substr(dot + 1);
        }
        if (mantissa.empty() || mantissa == "+" || mantissa == "-") return std::nullopt;
        bool any_digit = false;
        for (char c : mantissa) {
            if (std::isdigit(static_cast<unsigned char>(c))) any_digit = true;
        }
        if (!any_digit) return std::nullopt;
        try {
            num = std::stoll(mantissa);
        } catch (...) {
            return std::nullopt;
        }
        for (int i = 0; i < frac_digits; ++i) den *= 10;
    }
    if (den < 0) {
        num = -num;
        den = -den;
    }
    long long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    if (den == 1) return std::to_string(num);
    return std::to_string(num) + "/" + std::to_string(den);
}

}  // namespace oracle

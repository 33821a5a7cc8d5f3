// Generates the bundled synthetic corpus: problems, a contamination set that
// overlaps some of them, and a small evaluation benchmark. Deterministic, so
// the committed data files can be regenerated bit-identically.

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mathpipe/corpus.hpp"
#include "mathpipe/eval.hpp"
#include "mathpipe/generation.hpp"
#include "mathpipe/rng.hpp"

using namespace mathpipe;

namespace {

std::string num(DetRng& rng, int lo, int hi) {
    return std::to_string(lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1))));
}

// Every 13-word window of a generated question contains at least one random
// slot with a wide value range, so questions from the same template share no
// 13-gram except by genuine slot collisions.
std::string make_question(DetRng& rng) {
    const char* actor[] = {"Ana", "Borik", "Chen", "Dara", "Edem", "Farid"};
    switch (rng.below(8)) {
        case 0:
            return "Let f(n) = n^2 + " + num(rng, 101, 999) + "n + " + num(rng, 101, 999) +
                   ". Over the inputs f(1) up to f(" + num(rng, 120, 960) +
                   "), find the remainder of the total modulo " + num(rng, 101, 997) + ".";
        case 1:
            return "In a tournament with " + num(rng, 106, 390) + " teams, every pair plays " +
                   num(rng, 102, 199) + " matches and each match awards " + num(rng, 110, 480) +
                   " points shared between the sides. After round " + num(rng, 130, 870) +
                   ", compute the total points distributed so far.";
        case 2:
            return std::string(actor[rng.below(6)]) + " writes the integers from 1 to " +
                   num(rng, 150, 940) + " on a board, erases the largest " + num(rng, 102, 430) +
                   " of them, and replaces those by their sum modulo " + num(rng, 111, 889) +
                   "; after " + num(rng, 105, 595) + " such moves, find the largest number visible.";
        case 3:
            return "A sequence has first term " + num(rng, 102, 909) +
                   " and every next term equals " + num(rng, 120, 980) +
                   " times the current term plus " + num(rng, 101, 991) +
                   ". Determine the index of the first term greater than " + num(rng, 1000, 9999) + ".";
        case 4:
            return "The cubic x^3 - " + num(rng, 101, 899) + "x^2 + " + num(rng, 105, 960) + "x - " +
                   num(rng, 102, 970) + " has three real roots; compute " + num(rng, 103, 495) +
                   " times the sum of the squares of these roots.";
        case 5:
            return "Count the lattice paths from (0, 0) to (" + num(rng, 110, 460) + ", " +
                   num(rng, 105, 455) + ") using only unit right and up steps that avoid (" +
                   num(rng, 101, 399) + ", " + num(rng, 102, 398) +
                   ") and touch the main diagonal at most " + num(rng, 101, 199) + " times.";
        case 6:
            return "A spinner has " + num(rng, 104, 304) + " sectors labeled " + num(rng, 101, 201) +
                   " through " + num(rng, 305, 905) + "; " + std::string(actor[rng.below(6)]) +
                   " spins it " + num(rng, 108, 608) + " times; find the chance, times " +
                   num(rng, 112, 912) + ", that the recorded sum is divisible by " +
                   num(rng, 103, 203) + ".";
        default:
            return "An urn holds " + num(rng, 109, 509) + " red, " + num(rng, 113, 613) +
                   " blue, and " + num(rng, 115, 715) + " green tokens; drawing " +
                   num(rng, 118, 418) + " tokens without replacement, in how many ways can the draw "
                   "contain exactly " +
                   num(rng, 117, 317) + " blue tokens?";
    }
}

std::string make_offtopic_question(DetRng& rng) {
    const char* topic[] = {"orchard", "library", "harbor", "observatory", "bakery", "museum"};
    return "A caretaker at the " + std::string(topic[rng.below(6)]) + " schedules " + num(rng, 3, 9) +
           " maintenance visits per week for " + num(rng, 4, 14) +
           " weeks, skipping every " + num(rng, 2, 6) +
           "th week entirely; tally the visits that actually happen.";
}

}  // namespace

int main(int argc, char** argv) {
    const std::filesystem::path out_dir = argc > 1 ? argv[1] : "data";
    std::filesystem::create_directories(out_dir);

    DetRng rng(0x5eedc0de);

    // problems
    std::vector<ProblemRecord> problems;
    std::vector<std::string> questions;
    for (int i = 0; i < 200; ++i) {
        ProblemRecord p;
        char id[16];
        std::snprintf(id, sizeof(id), "p%04d", i);
        p.id = id;
        const std::uint64_t source_draw = rng.below(10);
        p.source = source_draw < 4   ? Source::AoPS
                   : source_draw < 8 ? Source::StackExchangeMath
                                     : Source::Synthetic;
        p.question = make_question(rng);
        questions.push_back(p.question);

        const std::uint64_t answer_draw = rng.below(100);
        if (answer_draw < 62) {
            p.extracted_answer = DeterministicMockClient::ideal_answer(p.question);
        } else if (answer_draw < 70) {
            // Noisy forum answer: far from anything the model ever produces.
            p.extracted_answer = DeterministicMockClient::ideal_answer(p.question) + "000001";
        }
        problems.push_back(std::move(p));
    }
    write_problems(out_dir / "synthetic_problems.jsonl", problems);

    // contamination set: verbatim copies, normalization variants, and
    // unrelated questions.
    std::vector<std::string> bench_lines;
    int bench_id = 0;
    auto add_bench = [&](const std::string& question) {
        char id[16];
        std::snprintf(id, sizeof(id), "b%03d", bench_id++);
        nlohmann::ordered_json j;
        j["id"] = id;
        j["question"] = question;
        bench_lines.push_back(j.dump());
    };
    for (int i = 0; i < 8; ++i) add_bench(questions[static_cast<std::size_t>(i * 23 + 5)]);
    for (int i = 0; i < 4; ++i) {
        std::string variant = questions[static_cast<std::size_t>(i * 31 + 11)];
        for (char& c : variant) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        add_bench("   " + variant + "  ");
    }
    for (int i = 0; i < 8; ++i) add_bench(make_offtopic_question(rng));
    {
        std::ofstream out(out_dir / "contamination_benchmark.jsonl", std::ios::binary);
        for (const std::string& line : bench_lines) out << line << "\n";
    }

    // evaluation benchmark with known references
    BenchmarkSet bench;
    bench.name = "synthetic-mini";
    bench.k = 8;
    bench.runs = 8;
    for (int i = 0; i < 25; ++i) {
        BenchmarkProblem p;
        char id[16];
        std::snprintf(id, sizeof(id), "e%03d", i);
        p.id = id;
        p.question = make_question(rng);
        p.reference_answer = DeterministicMockClient::ideal_answer(p.question);
        bench.problems.push_back(std::move(p));
    }
    {
        std::ofstream out(out_dir / "eval_benchmark.json", std::ios::binary);
        out << bench.to_json();
    }

    std::cout << "wrote " << problems.size() << " problems, " << bench_lines.size()
              << " contamination questions, " << bench.problems.size() << " eval problems to "
              << out_dir.string() << "\n";
    return 0;
}

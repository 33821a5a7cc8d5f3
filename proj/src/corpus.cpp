#include "mathpipe/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "json_util.hpp"

namespace mathpipe {

namespace {

const char* const kProblemFields[] = {"id",              "source",
                                      "question",        "extracted_answer",
                                      "reference_answer", "answer_provenance",
                                      "removed_reason"};
const char* const kTraceFields[] = {"id",   "problem_id",   "mode",        "tool",   "seed",
                                    "text", "final_answer", "token_count", "correct"};

template <std::size_t N>
bool is_known_field(const std::string& key, const char* const (&fields)[N]) {
    return std::find_if(std::begin(fields), std::end(fields),
                        [&](const char* f) { return key == f; }) != std::end(fields);
}

std::optional<std::string> opt_string(const ojson& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) raise(Errc::MalformedRecord, std::string(key) + " must be a string");
    return it->get<std::string>();
}

void append_extras(ojson& out, const std::string& extra_json) {
    if (extra_json.empty()) return;
    const ojson extras = ojson::parse(extra_json);
    for (const auto& [key, value] : extras.items()) out[key] = value;
}

template <std::size_t N>
std::string collect_extras(const ojson& j, const char* const (&fields)[N]) {
    ojson extras = ojson::object();
    for (const auto& [key, value] : j.items()) {
        if (!is_known_field(key, fields)) extras[key] = value;
    }
    return extras.empty() ? std::string() : extras.dump();
}

}  // namespace

std::string serialize_problem(const ProblemRecord& r) {
    ojson j;
    j["id"] = r.id;
    j["source"] = to_string(r.source);
    j["question"] = r.question;
    if (r.extracted_answer) j["extracted_answer"] = *r.extracted_answer;
    if (r.reference_answer) j["reference_answer"] = *r.reference_answer;
    if (r.answer_provenance) j["answer_provenance"] = to_string(*r.answer_provenance);
    if (r.removed_reason) j["removed_reason"] = to_string(*r.removed_reason);
    append_extras(j, r.extra_json);
    return j.dump();
}

std::string serialize_trace(const TraceRecord& r) {
    ojson j;
    j["id"] = r.id;
    j["problem_id"] = r.problem_id;
    j["mode"] = to_string(r.mode);
    j["tool"] = to_string(r.tool);
    j["seed"] = r.seed;
    j["text"] = r.text;
    if (r.final_answer) j["final_answer"] = *r.final_answer;
    j["token_count"] = r.token_count;
    if (r.correct) j["correct"] = *r.correct;
    append_extras(j, r.extra_json);
    return j.dump();
}

ProblemRecord parse_problem_line(const std::string& line) {
    const ojson j = jsonu::parse(line, Errc::MalformedRecord, "problem record");
    if (!j.is_object()) raise(Errc::MalformedRecord, "problem record must be a JSON object");
    ProblemRecord r;
    r.id = jsonu::require_string(j, "id", Errc::MalformedRecord, "problem record");
    if (r.id.empty()) raise(Errc::MalformedRecord, "problem record: id must be non-empty");
    r.source = source_from_string(jsonu::require_string(j, "source", Errc::MalformedRecord, "problem record"));
    r.question = jsonu::require_string(j, "question", Errc::MalformedRecord, "problem record");
    r.extracted_answer = opt_string(j, "extracted_answer");
    r.reference_answer = opt_string(j, "reference_answer");
    if (auto p = opt_string(j, "answer_provenance")) r.answer_provenance = provenance_from_string(*p);
    if (r.reference_answer.has_value() != r.answer_provenance.has_value()) {
        raise(Errc::MalformedRecord,
              "reference_answer and answer_provenance must be present together (problem " + r.id + ")");
    }
    if (auto reason = opt_string(j, "removed_reason")) r.removed_reason = removed_reason_from_string(*reason);
    r.extra_json = collect_extras(j, kProblemFields);
    return r;
}

TraceRecord parse_trace_line(const std::string& line) {
    const ojson j = jsonu::parse(line, Errc::MalformedRecord, "trace record");
    if (!j.is_object()) raise(Errc::MalformedRecord, "trace record must be a JSON object");
    TraceRecord r;
    r.id = jsonu::require_string(j, "id", Errc::MalformedRecord, "trace record");
    if (r.id.empty()) raise(Errc::MalformedRecord, "trace record: id must be non-empty");
    r.problem_id = jsonu::require_string(j, "problem_id", Errc::MalformedRecord, "trace record");
    if (r.problem_id.empty()) raise(Errc::MalformedRecord, "trace record: problem_id must be non-empty");
    r.mode = mode_from_string(jsonu::require_string(j, "mode", Errc::MalformedRecord, "trace record"));
    r.tool = tool_from_string(jsonu::require_string(j, "tool", Errc::MalformedRecord, "trace record"));
    r.seed = jsonu::require_int(j, "seed", Errc::MalformedRecord, "trace record");
    r.text = jsonu::require_string(j, "text", Errc::MalformedRecord, "trace record");
    r.final_answer = opt_string(j, "final_answer");
    r.token_count = jsonu::require_int(j, "token_count", Errc::MalformedRecord, "trace record");
    if (r.token_count < 0) raise(Errc::MalformedRecord, "token_count must be >= 0 (trace " + r.id + ")");
    if (auto it = j.find("correct"); it != j.end() && !it->is_null()) {
        if (!it->is_boolean()) raise(Errc::MalformedRecord, "correct must be a boolean (trace " + r.id + ")");
        r.correct = it->get<bool>();
    }
    r.extra_json = collect_extras(j, kTraceFields);
    return r;
}

namespace {

std::string trace_key(const TraceRecord& r) {
    return r.problem_id + "\x1f" + std::string(to_string(r.mode)) + "\x1f" +
           std::string(to_string(r.tool)) + "\x1f" + std::to_string(r.seed);
}

}  // namespace

template <class Record>
RecordReader<Record>::RecordReader(const std::filesystem::path& path)
    : in_(path, std::ios::binary), path_(path.string()) {
    if (!in_) raise(Errc::FileNotFound, "cannot open " + path_);
}

template <class Record>
std::optional<Record> RecordReader<Record>::next() {
    std::string line;
    while (std::getline(in_, line)) {
        ++line_;
        if (line.empty()) continue;
        Record record;
        try {
            if constexpr (std::is_same_v<Record, ProblemRecord>) {
                record = parse_problem_line(line);
            } else {
                record = parse_trace_line(line);
            }
        } catch (const Error& e) {
            throw Error(e.code(), path_ + ":" + std::to_string(line_) + ": " + e.what());
        }
        if (!seen_ids_.insert(record.id).second) {
            raise(Errc::DuplicateId, path_ + ":" + std::to_string(line_) + ": duplicate id " + record.id);
        }
        if constexpr (std::is_same_v<Record, TraceRecord>) {
            if (!seen_keys_.insert(trace_key(record)).second) {
                raise(Errc::DuplicateId, path_ + ":" + std::to_string(line_) +
                                             ": duplicate (problem_id, mode, tool, seed) for trace " +
                                             record.id);
            }
        }
        return record;
    }
    return std::nullopt;
}

template class RecordReader<ProblemRecord>;
template class RecordReader<TraceRecord>;

namespace {

template <class Record>
ReadResult<Record> read_all(const std::filesystem::path& path, std::size_t max_errors) {
    RecordReader<Record> reader(path);
    ReadResult<Record> result;
    for (;;) {
        try {
            auto record = reader.next();
            if (!record) break;
            result.records.push_back(std::move(*record));
        } catch (const Error& e) {
            if (result.errors.size() >= max_errors) throw;
            result.errors.push_back({reader.line(), e.what()});
        }
    }
    return result;
}

}  // namespace

ReadResult<ProblemRecord> read_problems(const std::filesystem::path& path, std::size_t max_errors) {
    return read_all<ProblemRecord>(path, max_errors);
}

ReadResult<TraceRecord> read_traces(const std::filesystem::path& path, std::size_t max_errors) {
    return read_all<TraceRecord>(path, max_errors);
}

namespace {

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(Errc::FileNotFound, "cannot write " + path.string());
    for (const std::string& line : lines) out << line << "\n";
}

}  // namespace

void write_problems(const std::filesystem::path& path, const std::vector<ProblemRecord>& records) {
    std::vector<std::string> lines;
    lines.reserve(records.size());
    for (const ProblemRecord& r : records) lines.push_back(serialize_problem(r));
    write_lines(path, lines);
}

void write_traces(const std::filesystem::path& path, const std::vector<TraceRecord>& records) {
    std::vector<std::string> lines;
    lines.reserve(records.size());
    for (const TraceRecord& r : records) lines.push_back(serialize_trace(r));
    write_lines(path, lines);
}

void CorpusStats::merge(const CorpusStats& other) {
    for (const auto& [key, count] : other.counts_by_mode_tool_source) {
        counts_by_mode_tool_source[key] += count;
    }
    for (const auto& [key, count] : other.counts_by_bucket_source) {
        counts_by_bucket_source[key] += count;
    }
    total += other.total;
}

std::unordered_map<std::string, const ProblemRecord*> index_problems(
    const std::vector<ProblemRecord>& problems) {
    std::unordered_map<std::string, const ProblemRecord*> index;
    index.reserve(problems.size());
    for (const ProblemRecord& p : problems) {
        if (!index.emplace(p.id, &p).second) raise(Errc::DuplicateId, "duplicate problem id " + p.id);
    }
    return index;
}

CorpusStats compute_stats(const std::vector<ProblemRecord>& problems,
                          const std::vector<TraceRecord>& traces, const BucketSpec& buckets,
                          const TokenCounter& counter) {
    buckets.validate();
    const auto index = index_problems(problems);
    CorpusStats stats;
    for (const TraceRecord& trace : traces) {
        auto it = index.find(trace.problem_id);
        if (it == index.end()) {
            raise(Errc::DanglingProblemRef,
                  "trace " + trace.id + " references unknown problem " + trace.problem_id);
        }
        const Source source = it->second->source;
        const int bucket = assign_bucket(counter.count(trace.text), buckets);
        ++stats.counts_by_mode_tool_source[{trace.mode, trace.tool, source}];
        ++stats.counts_by_bucket_source[{bucket, source}];
        ++stats.total;
    }
    return stats;
}

std::string humanize_count(std::int64_t n) {
    if (n < 1000) return std::to_string(n);
    if (n % 1000 == 0) return std::to_string(n / 1000) + "K";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1fK", static_cast<double>(n) / 1000.0);
    return buf;
}

namespace {

std::string source_label(Source s) {
    switch (s) {
        case Source::AoPS: return "AoPS";
        case Source::StackExchangeMath: return "StackExchange-Math";
        case Source::Synthetic: return "Synthetic";
    }
    return "?";
}

std::string tool_label(Tool t) { return t == Tool::PythonTIR ? "Python TIR" : "Without Python TIR"; }

std::vector<Source> sources_present(const CorpusStats& stats) {
    std::vector<Source> sources;
    for (Source s : {Source::AoPS, Source::StackExchangeMath, Source::Synthetic}) {
        bool found = false;
        for (const auto& [key, _] : stats.counts_by_mode_tool_source) {
            if (std::get<2>(key) == s) {
                found = true;
                break;
            }
        }
        for (const auto& [key, _] : stats.counts_by_bucket_source) {
            if (key.second == s) {
                found = true;
                break;
            }
        }
        if (found) sources.push_back(s);
    }
    return sources;
}

std::string render_grid(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> widths;
    for (const auto& row : rows) {
        if (widths.size() < row.size()) widths.resize(row.size());
        for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
    }
    std::ostringstream out;
    for (const auto& row : rows) {
        std::string line;
        for (std::size_t c = 0; c < row.size(); ++c) {
            line += row[c];
            if (c + 1 < row.size()) line.append(widths[c] - row[c].size() + 2, ' ');
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out << line << "\n";
    }
    return out.str();
}

}  // namespace

std::string render_mode_tool_table(const CorpusStats& stats) {
    const auto sources = sources_present(stats);
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header = {"Tool Usage", "Reasoning Mode"};
    for (Source s : sources) header.push_back(source_label(s));
    rows.push_back(std::move(header));

    for (Tool tool : {Tool::PythonTIR, Tool::NoTIR}) {
        bool first = true;
        for (Mode mode : {Mode::High, Mode::Medium, Mode::Low}) {
            std::vector<std::string> row = {first ? tool_label(tool) : "", std::string(to_string(mode))};
            for (Source s : sources) {
                auto it = stats.counts_by_mode_tool_source.find({mode, tool, s});
                row.push_back(humanize_count(it == stats.counts_by_mode_tool_source.end() ? 0 : it->second));
            }
            rows.push_back(std::move(row));
            first = false;
        }
    }
    return render_grid(rows);
}

std::string render_bucket_table(const CorpusStats& stats, const BucketSpec& buckets) {
    const auto sources = sources_present(stats);
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header = {"Data Source"};
    for (std::size_t b = 0; b < buckets.bucket_count(); ++b) header.push_back(buckets.label(b));
    rows.push_back(std::move(header));

    for (Source s : sources) {
        std::vector<std::string> row = {source_label(s)};
        for (std::size_t b = 0; b < buckets.bucket_count(); ++b) {
            auto it = stats.counts_by_bucket_source.find({static_cast<int>(b), s});
            row.push_back(humanize_count(it == stats.counts_by_bucket_source.end() ? 0 : it->second));
        }
        rows.push_back(std::move(row));
    }
    return render_grid(rows);
}

std::string stats_to_json(const CorpusStats& stats, const BucketSpec& buckets) {
    ojson j;
    j["total"] = stats.total;
    ojson by_mode = ojson::array();
    for (const auto& [key, count] : stats.counts_by_mode_tool_source) {
        by_mode.push_back({{"mode", to_string(std::get<0>(key))},
                           {"tool", to_string(std::get<1>(key))},
                           {"source", to_string(std::get<2>(key))},
                           {"count", count}});
    }
    j["counts_by_mode_tool_source"] = std::move(by_mode);
    ojson by_bucket = ojson::array();
    for (const auto& [key, count] : stats.counts_by_bucket_source) {
        by_bucket.push_back({{"bucket", key.first},
                             {"label", buckets.label(static_cast<std::size_t>(key.first))},
                             {"source", to_string(key.second)},
                             {"count", count}});
    }
    j["counts_by_bucket_source"] = std::move(by_bucket);
    return j.dump(2) + "\n";
}

}  // namespace mathpipe

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mathpipe/composition.hpp"
#include "mathpipe/types.hpp"

namespace mathpipe {

// Canonical line-delimited JSON forms. Known fields are emitted in schema
// order, unknown ingested fields follow in their original order, so
// serialize(parse(line)) is a fixed point on canonical files.
std::string serialize_problem(const ProblemRecord& record);
std::string serialize_trace(const TraceRecord& record);
ProblemRecord parse_problem_line(const std::string& line);
TraceRecord parse_trace_line(const std::string& line);

struct LineError {
    std::int64_t line = 0;
    std::string message;
};

template <class Record>
struct ReadResult {
    std::vector<Record> records;
    std::vector<LineError> errors;  // within the --max-errors budget
};

// Streaming reader: one validated record per non-empty line. Duplicate ids
// (and duplicate (problem_id, mode, tool, seed) keys for traces) are
// per-record errors, like malformed lines.
template <class Record>
class RecordReader {
public:
    explicit RecordReader(const std::filesystem::path& path);

    // Next valid record, or nullopt at end of file. Throws Error with code
    // MalformedRecord/DuplicateId on a bad line; the reader stays usable, so
    // callers with an error budget can keep going.
    std::optional<Record> next();

    std::int64_t line() const { return line_; }

private:
    std::ifstream in_;
    std::string path_;
    std::int64_t line_ = 0;
    std::unordered_set<std::string> seen_ids_;
    std::unordered_set<std::string> seen_keys_;
};

using ProblemReader = RecordReader<ProblemRecord>;
using TraceReader = RecordReader<TraceRecord>;

// Reads the whole file, tolerating up to max_errors bad records. The first
// error past the budget is rethrown.
ReadResult<ProblemRecord> read_problems(const std::filesystem::path& path, std::size_t max_errors = 0);
ReadResult<TraceRecord> read_traces(const std::filesystem::path& path, std::size_t max_errors = 0);

void write_problems(const std::filesystem::path& path, const std::vector<ProblemRecord>& records);
void write_traces(const std::filesystem::path& path, const std::vector<TraceRecord>& records);

struct CorpusStats {
    std::map<std::tuple<Mode, Tool, Source>, std::int64_t> counts_by_mode_tool_source;
    std::map<std::pair<int, Source>, std::int64_t> counts_by_bucket_source;
    std::int64_t total = 0;

    // Cell-wise sum; associative and commutative, so shards can be merged in
    // any order.
    void merge(const CorpusStats& other);
};

// Counts every trace into one (mode, tool, source) cell and one
// (bucket, source) cell. Source resolves through the trace's problem; token
// counts come from the injected counter.
CorpusStats compute_stats(const std::vector<ProblemRecord>& problems,
                          const std::vector<TraceRecord>& traces, const BucketSpec& buckets,
                          const TokenCounter& counter);

std::string stats_to_json(const CorpusStats& stats, const BucketSpec& buckets);
// Plain-text tables: tool/mode rows by source columns, and source rows by
// length-bucket columns.
std::string render_mode_tool_table(const CorpusStats& stats);
std::string render_bucket_table(const CorpusStats& stats, const BucketSpec& buckets);

// Table cell shorthand: 175000 -> "175K", 1234 -> "1.2K", 42 -> "42".
std::string humanize_count(std::int64_t n);

std::unordered_map<std::string, const ProblemRecord*> index_problems(
    const std::vector<ProblemRecord>& problems);

}  // namespace mathpipe

#include "mathpipe/types.hpp"

namespace mathpipe {

std::string_view errc_name(Errc code) {
    switch (code) {
        case Errc::FileNotFound: return "FileNotFound";
        case Errc::MalformedRecord: return "MalformedRecord";
        case Errc::DuplicateId: return "DuplicateId";
        case Errc::DanglingProblemRef: return "DanglingProblemRef";
        case Errc::EmptyProblemSet: return "EmptyProblemSet";
        case Errc::EmptyModelAnswers: return "EmptyModelAnswers";
        case Errc::EmptyBenchmark: return "EmptyBenchmark";
        case Errc::EmptyAnswerList: return "EmptyAnswerList";
        case Errc::NoLowModeTraces: return "NoLowModeTraces";
        case Errc::UnjudgedTrace: return "UnjudgedTrace";
        case Errc::MissingReference: return "MissingReference";
        case Errc::MissingPassRate: return "MissingPassRate";
        case Errc::MissingConfig: return "MissingConfig";
        case Errc::MissingStepTime: return "MissingStepTime";
        case Errc::OverMaxContext: return "OverMaxContext";
        case Errc::TraceExceedsCapacity: return "TraceExceedsCapacity";
        case Errc::PoolTooSmall: return "PoolTooSmall";
        case Errc::SizeMismatch: return "SizeMismatch";
        case Errc::RunCountMismatch: return "RunCountMismatch";
        case Errc::ClientError: return "ClientError";
        case Errc::Timeout: return "Timeout";
        case Errc::JudgeError: return "JudgeError";
        case Errc::ConfigError: return "ConfigError";
        case Errc::InvalidSpec: return "InvalidSpec";
        case Errc::UnknownSubcommand: return "UnknownSubcommand";
    }
    return "Error";
}

std::string_view to_string(Source v) {
    switch (v) {
        case Source::AoPS: return "AoPS";
        case Source::StackExchangeMath: return "StackExchangeMath";
        case Source::Synthetic: return "Synthetic";
    }
    return "?";
}

std::string_view to_string(Mode v) {
    switch (v) {
        case Mode::High: return "High";
        case Mode::Medium: return "Medium";
        case Mode::Low: return "Low";
    }
    return "?";
}

std::string_view to_string(Tool v) {
    switch (v) {
        case Tool::PythonTIR: return "PythonTIR";
        case Tool::NoTIR: return "NoTIR";
    }
    return "?";
}

std::string_view to_string(AnswerProvenance v) {
    switch (v) {
        case AnswerProvenance::Extracted: return "Extracted";
        case AnswerProvenance::MajorityVote: return "MajorityVote";
        case AnswerProvenance::Replaced: return "Replaced";
    }
    return "?";
}

std::string_view to_string(RemovedReason v) {
    switch (v) {
        case RemovedReason::Decontaminated: return "Decontaminated";
        case RemovedReason::TooEasy: return "TooEasy";
        case RemovedReason::ProofStyle: return "ProofStyle";
        case RemovedReason::NoAnswer: return "NoAnswer";
    }
    return "?";
}

namespace {

[[noreturn]] void bad_enum(std::string_view what, std::string_view value) {
    raise(Errc::MalformedRecord, "invalid " + std::string(what) + " value '" + std::string(value) + "'");
}

}  // namespace

Source source_from_string(std::string_view s) {
    if (s == "AoPS") return Source::AoPS;
    if (s == "StackExchangeMath") return Source::StackExchangeMath;
    if (s == "Synthetic") return Source::Synthetic;
    bad_enum("source", s);
}

Mode mode_from_string(std::string_view s) {
    if (s == "High") return Mode::High;
    if (s == "Medium") return Mode::Medium;
    if (s == "Low") return Mode::Low;
    bad_enum("mode", s);
}

Tool tool_from_string(std::string_view s) {
    if (s == "PythonTIR") return Tool::PythonTIR;
    if (s == "NoTIR") return Tool::NoTIR;
    bad_enum("tool", s);
}

AnswerProvenance provenance_from_string(std::string_view s) {
    if (s == "Extracted") return AnswerProvenance::Extracted;
    if (s == "MajorityVote") return AnswerProvenance::MajorityVote;
    if (s == "Replaced") return AnswerProvenance::Replaced;
    bad_enum("answer_provenance", s);
}

RemovedReason removed_reason_from_string(std::string_view s) {
    if (s == "Decontaminated") return RemovedReason::Decontaminated;
    if (s == "TooEasy") return RemovedReason::TooEasy;
    if (s == "ProofStyle") return RemovedReason::ProofStyle;
    if (s == "NoAnswer") return RemovedReason::NoAnswer;
    bad_enum("removed_reason", s);
}

void GenerationSpec::validate() const {
    if (modes.empty()) raise(Errc::InvalidSpec, "generation spec needs at least one mode");
    if (tools.empty()) raise(Errc::InvalidSpec, "generation spec needs at least one tool setting");
    if (samples_per_config < 1) raise(Errc::InvalidSpec, "samples_per_config must be >= 1");
    if (!(top_p > 0.0 && top_p <= 1.0)) raise(Errc::InvalidSpec, "top_p must be in (0, 1]");
    if (temperature < 0.0) raise(Errc::InvalidSpec, "temperature must be >= 0");
    if (max_tokens < 1) raise(Errc::InvalidSpec, "max_tokens must be >= 1");
}

}  // namespace mathpipe

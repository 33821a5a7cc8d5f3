#include "mathpipe/config.hpp"

#include <fstream>
#include <sstream>

#include "json_util.hpp"

namespace mathpipe {

namespace {

void check_keys(const ojson& obj, const std::vector<std::string>& allowed, const std::string& path) {
    for (const auto& [key, _] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            raise(Errc::ConfigError, "unknown config key " + (path.empty() ? key : path + "." + key));
        }
    }
}

std::int64_t parse_bucket_key(const std::string& key, const std::string& path) {
    try {
        std::size_t pos = 0;
        const std::int64_t bucket = std::stoll(key, &pos);
        if (pos != key.size() || bucket <= 0) throw std::invalid_argument(key);
        return bucket;
    } catch (const std::exception&) {
        raise(Errc::ConfigError, path + ": bucket key '" + key + "' is not a positive integer");
    }
}

}  // namespace

void PipelineConfig::validate() const {
    curation.validate();
    buckets.validate();
    mode_mix.validate();
    generation.validate();
    if (endpoint) endpoint->validate();
    if (problems_path.empty()) raise(Errc::ConfigError, "problems path must be set");
    if (contamination_path.empty()) raise(Errc::ConfigError, "contamination_set path must be set");
    for (const auto& [bucket, config] : parallelism_table) {
        if (bucket <= 0) raise(Errc::ConfigError, "parallelism_table buckets must be positive");
        config.validate();
    }
}

PipelineConfig PipelineConfig::from_json_text(const std::string& text) {
    const ojson j = jsonu::parse(text, Errc::ConfigError, "pipeline config");
    if (!j.is_object()) raise(Errc::ConfigError, "pipeline config must be a JSON object");
    check_keys(j, {"problems", "contamination_set", "seed", "max_errors", "curation", "buckets",
                   "mode_mix", "parallelism_table", "cost_profile", "generation", "judge_prompt", "eval"},
               "");

    PipelineConfig config;
    if (auto it = j.find("problems"); it != j.end()) config.problems_path = it->get<std::string>();
    if (auto it = j.find("contamination_set"); it != j.end()) {
        config.contamination_path = it->get<std::string>();
    }
    if (auto it = j.find("seed"); it != j.end()) config.seed = it->get<std::uint64_t>();
    if (auto it = j.find("max_errors"); it != j.end()) config.max_errors = it->get<std::size_t>();

    if (auto it = j.find("curation"); it != j.end()) {
        check_keys(*it, {"pass_rate_threshold", "rating_samples", "reconcile_samples", "ngram_size",
                         "ngram_overlap_threshold"},
                   "curation");
        CurationConfig& c = config.curation;
        if (auto f = it->find("pass_rate_threshold"); f != it->end()) c.pass_rate_threshold = f->get<double>();
        if (auto f = it->find("rating_samples"); f != it->end()) c.rating_samples = f->get<int>();
        if (auto f = it->find("reconcile_samples"); f != it->end()) c.reconcile_samples = f->get<int>();
        if (auto f = it->find("ngram_size"); f != it->end()) c.ngram_size = f->get<int>();
        if (auto f = it->find("ngram_overlap_threshold"); f != it->end()) {
            c.ngram_overlap_threshold = f->get<double>();
        }
    }

    if (auto it = j.find("buckets"); it != j.end()) {
        if (!it->is_array()) raise(Errc::ConfigError, "buckets must be an array of token ceilings");
        config.buckets.boundaries.clear();
        for (const ojson& b : *it) config.buckets.boundaries.push_back(b.get<std::int64_t>());
    }

    if (auto it = j.find("mode_mix"); it != j.end()) {
        check_keys(*it, {"fraction_medium", "fraction_low"}, "mode_mix");
        if (auto f = it->find("fraction_medium"); f != it->end()) {
            config.mode_mix.fraction_medium = f->get<double>();
        }
        if (auto f = it->find("fraction_low"); f != it->end()) config.mode_mix.fraction_low = f->get<double>();
    }

    if (auto it = j.find("parallelism_table"); it != j.end()) {
        for (const auto& [bucket_key, entry] : it->items()) {
            check_keys(entry, {"tp", "cp", "pp", "etp", "emp"}, "parallelism_table." + bucket_key);
            ParallelismConfig pc;
            pc.tp = static_cast<int>(jsonu::require_int(entry, "tp", Errc::ConfigError, "parallelism_table"));
            pc.cp = static_cast<int>(jsonu::require_int(entry, "cp", Errc::ConfigError, "parallelism_table"));
            pc.pp = static_cast<int>(jsonu::require_int(entry, "pp", Errc::ConfigError, "parallelism_table"));
            pc.etp = static_cast<int>(jsonu::require_int(entry, "etp", Errc::ConfigError, "parallelism_table"));
            pc.emp = static_cast<int>(jsonu::require_int(entry, "emp", Errc::ConfigError, "parallelism_table"));
            config.parallelism_table[parse_bucket_key(bucket_key, "parallelism_table")] = pc;
        }
    }

    if (auto it = j.find("cost_profile"); it != j.end()) config.cost_profile = it->get<std::string>();

    if (auto it = j.find("generation"); it != j.end()) {
        check_keys(*it, {"modes", "tools", "samples_per_config", "temperature", "top_p", "max_tokens",
                         "endpoint"},
                   "generation");
        GenerationSpec& g = config.generation;
        if (auto f = it->find("modes"); f != it->end()) {
            g.modes.clear();
            for (const ojson& m : *f) g.modes.insert(mode_from_string(m.get<std::string>()));
        }
        if (auto f = it->find("tools"); f != it->end()) {
            g.tools.clear();
            for (const ojson& t : *f) g.tools.insert(tool_from_string(t.get<std::string>()));
        }
        if (auto f = it->find("samples_per_config"); f != it->end()) g.samples_per_config = f->get<int>();
        if (auto f = it->find("temperature"); f != it->end()) g.temperature = f->get<double>();
        if (auto f = it->find("top_p"); f != it->end()) g.top_p = f->get<double>();
        if (auto f = it->find("max_tokens"); f != it->end()) g.max_tokens = f->get<std::int64_t>();
        if (auto f = it->find("endpoint"); f != it->end() && !f->is_null()) {
            check_keys(*f, {"base_url", "model", "auth_env_var", "max_in_flight", "timeout_seconds",
                            "max_attempts", "backoff_initial_ms"},
                       "generation.endpoint");
            EndpointConfig e;
            e.base_url = jsonu::require_string(*f, "base_url", Errc::ConfigError, "generation.endpoint");
            if (auto v = f->find("model"); v != f->end()) e.model = v->get<std::string>();
            if (auto v = f->find("auth_env_var"); v != f->end()) e.auth_env_var = v->get<std::string>();
            if (auto v = f->find("max_in_flight"); v != f->end()) e.max_in_flight = v->get<int>();
            if (auto v = f->find("timeout_seconds"); v != f->end()) e.timeout_seconds = v->get<int>();
            if (auto v = f->find("max_attempts"); v != f->end()) e.max_attempts = v->get<int>();
            if (auto v = f->find("backoff_initial_ms"); v != f->end()) e.backoff_initial_ms = v->get<int>();
            config.endpoint = std::move(e);
        }
    }

    if (auto it = j.find("judge_prompt"); it != j.end()) config.judge_prompt_path = it->get<std::string>();

    if (auto it = j.find("eval"); it != j.end()) {
        if (!it->is_array()) raise(Errc::ConfigError, "eval must be an array of benchmark entries");
        for (const ojson& entry : *it) {
            check_keys(entry, {"name", "path", "mode", "tool"}, "eval[]");
            EvalBenchmarkConfig bench;
            bench.name = jsonu::require_string(entry, "name", Errc::ConfigError, "eval entry");
            bench.path = jsonu::require_string(entry, "path", Errc::ConfigError, "eval entry");
            if (auto f = entry.find("mode"); f != entry.end()) {
                bench.mode = mode_from_string(f->get<std::string>());
            }
            if (auto f = entry.find("tool"); f != entry.end()) {
                bench.tool = tool_from_string(f->get<std::string>());
            }
            config.eval_benchmarks.push_back(std::move(bench));
        }
    }

    return config;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::FileNotFound, "cannot open config " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

}  // namespace mathpipe

#pragma once

#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rare/core.hpp"
#include "rare/jsonl.hpp"
#include "rare/log.hpp"
#include "rare/providers.hpp"
#include "rare/text.hpp"

namespace rare::config {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Minimal TOML reader (tables, scalars, single/multi-line arrays, comments,
// ${ENV} interpolation in strings). No C++ TOML library ships with the
// toolchain here, and configs only need this subset.
// ---------------------------------------------------------------------------

namespace toml {

inline std::string interpolate_env(const std::string& s) {
    std::string out;
    size_t i = 0;
    while (i < s.size()) {
        if (s[i] == '$' && i + 1 < s.size() && s[i + 1] == '{') {
            auto end = s.find('}', i + 2);
            if (end != std::string::npos) {
                std::string var = s.substr(i + 2, end - i - 2);
                const char* v = std::getenv(var.c_str());
                if (v) out += v;
                i = end + 1;
                continue;
            }
        }
        out.push_back(s[i++]);
    }
    return out;
}

inline std::string strip_comment(const std::string& line) {
    bool in_str = false;
    for (size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_str = !in_str;
        if (line[i] == '#' && !in_str) return line.substr(0, i);
    }
    return line;
}

inline json parse_scalar(const std::string& raw) {
    std::string v = text::trim(raw);
    if (v.empty()) throw ConfigInvalid("empty TOML value");
    if (v.front() == '"') {
        if (v.size() < 2 || v.back() != '"') throw ConfigInvalid("unterminated string: " + v);
        std::string inner = v.substr(1, v.size() - 2);
        std::string unescaped;
        for (size_t i = 0; i < inner.size(); ++i) {
            if (inner[i] == '\\' && i + 1 < inner.size()) {
                char n = inner[++i];
                unescaped.push_back(n == 'n' ? '\n' : n == 't' ? '\t' : n);
            } else {
                unescaped.push_back(inner[i]);
            }
        }
        return interpolate_env(unescaped);
    }
    if (v == "true") return true;
    if (v == "false") return false;
    if (v.front() == '[') {
        if (v.back() != ']') throw ConfigInvalid("unterminated array: " + v);
        json arr = json::array();
        std::string body = v.substr(1, v.size() - 2);
        std::string cur;
        bool in_str = false;
        for (char c : body) {
            if (c == '"') in_str = !in_str;
            if (c == ',' && !in_str) {
                if (!text::trim(cur).empty()) arr.push_back(parse_scalar(cur));
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        if (!text::trim(cur).empty()) arr.push_back(parse_scalar(cur));
        return arr;
    }
    // number
    try {
        if (v.find('.') != std::string::npos || v.find('e') != std::string::npos) {
            return std::stod(v);
        }
        return static_cast<int64_t>(std::stoll(v));
    } catch (...) {
        throw ConfigInvalid("cannot parse TOML value: " + v);
    }
}

inline json parse(const std::string& content) {
    json root = json::object();
    json* table = &root;
    auto lines = text::split_lines(content);

    for (size_t li = 0; li < lines.size(); ++li) {
        std::string line = text::trim(strip_comment(lines[li]));
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigInvalid("bad table header: " + line);
            std::string path = text::trim(line.substr(1, line.size() - 2));
            table = &root;
            size_t b = 0;
            while (b <= path.size()) {
                size_t e = path.find('.', b);
                std::string part = text::trim(e == std::string::npos ? path.substr(b)
                                                                     : path.substr(b, e - b));
                if (part.empty()) throw ConfigInvalid("bad table header: " + line);
                table = &(*table)[part];
                if (!table->is_object()) *table = json::object();
                if (e == std::string::npos) break;
                b = e + 1;
            }
            continue;
        }

        auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigInvalid("expected key = value: " + line);
        std::string key = text::trim(line.substr(0, eq));
        std::string value = text::trim(line.substr(eq + 1));

        // multi-line arrays: accumulate until brackets balance
        auto bracket_balance = [](const std::string& s) {
            int bal = 0;
            bool in_str = false;
            for (char c : s) {
                if (c == '"') in_str = !in_str;
                if (!in_str && c == '[') ++bal;
                if (!in_str && c == ']') --bal;
            }
            return bal;
        };
        while (bracket_balance(value) > 0 && li + 1 < lines.size()) {
            value += " " + text::trim(strip_comment(lines[++li]));
        }

        (*table)[key] = parse_scalar(value);
    }
    return root;
}

inline json parse_file(const fs::path& path) {
    return parse(jsonl::read_text(path));
}

} // namespace toml

// ---------------------------------------------------------------------------
// Pipeline configuration
// ---------------------------------------------------------------------------

struct ProviderRoleConfig {
    std::string model;
    std::string base_url;
    std::string api_key;
    std::string fixtures; // JSONL of (digest, response) rows; replaces the network backend
};

struct PipelineConfig {
    fs::path corpus_dir;
    Domain default_domain = Domain::other;

    size_t chunk_budget = 600;
    size_t window_n = 3;
    size_t window_stride = 2;
    double tau_rel = 0.85;
    double tau_q = 0.85;
    double tau_d = 0.85;

    uint64_t perturb_seed = 42;
    uint64_t split_seed = 7;
    std::map<std::string, size_t> test_quota; // pattern kind -> per-domain quota

    std::string judge_mode = "strict"; // strict | lenient | both
    double match_threshold = 0.9;
    size_t retrieval_k = 3;
    size_t edge_usage_cap = 5;
    size_t max_chain_len = 3;
    std::string pivot_language = "German";
    std::vector<std::string> refusals = {"no such info"};

    fs::path lexicon_path;
    fs::path output_dir = "out";
    fs::path cache_dir; // empty = <output_dir>/cache
    size_t max_in_flight = 8;

    ProviderRoleConfig extractor;  // KG extraction + QA writing
    ProviderRoleConfig qa_judge;   // quality gate (should differ from extractor)
    ProviderRoleConfig perturber;  // LLM perturbations + back-translation
    ProviderRoleConfig generator_endpoint; // shared endpoint; models listed below
    std::vector<std::string> generators;
    std::vector<std::string> embedding_models;
    std::string matcher_embedding_model; // stage-2 matcher + guards
    ProviderRoleConfig embedding_endpoint;

    bool mock = false; // swap every provider for fixture-backed mocks

    json to_json() const {
        return json{{"corpus_dir", corpus_dir.string()},
                    {"default_domain", rare::to_string(default_domain)},
                    {"chunk_budget", chunk_budget},
                    {"window_n", window_n},
                    {"window_stride", window_stride},
                    {"tau_rel", tau_rel},
                    {"tau_q", tau_q},
                    {"tau_d", tau_d},
                    {"perturb_seed", perturb_seed},
                    {"split_seed", split_seed},
                    {"test_quota", test_quota},
                    {"judge_mode", judge_mode},
                    {"match_threshold", match_threshold},
                    {"retrieval_k", retrieval_k},
                    {"edge_usage_cap", edge_usage_cap},
                    {"max_chain_len", max_chain_len},
                    {"pivot_language", pivot_language},
                    {"refusals", refusals},
                    {"lexicon_path", lexicon_path.string()},
                    {"output_dir", output_dir.string()},
                    {"extractor_model", extractor.model},
                    {"qa_judge_model", qa_judge.model},
                    {"perturber_model", perturber.model},
                    {"generators", generators},
                    {"embedding_models", embedding_models},
                    {"matcher_embedding_model", matcher_embedding_model},
                    {"mock", mock}};
    }

    void validate() const {
        auto chk = [](double v, const char* name) {
            if (!(v > 0.0 && v <= 1.0)) {
                throw ConfigInvalid(std::string(name) + " must be in (0, 1]");
            }
        };
        chk(tau_rel, "tau_rel");
        chk(tau_q, "tau_q");
        chk(tau_d, "tau_d");
        chk(match_threshold, "match_threshold");
        if (generators.empty()) throw ConfigInvalid("at least one generator is required");
        if (embedding_models.empty()) throw ConfigInvalid("at least one embedding model is required");
        if (corpus_dir.empty()) throw ConfigInvalid("corpus dir not set");
        if (chunk_budget == 0) throw ConfigInvalid("chunk budget must be positive");
        if (window_n == 0 || window_stride == 0) throw ConfigInvalid("window n/stride must be positive");
        if (judge_mode != "strict" && judge_mode != "lenient" && judge_mode != "both") {
            throw ConfigInvalid("judge_mode must be strict, lenient, or both");
        }
        if (!mock && !qa_judge.model.empty() && qa_judge.model == extractor.model) {
            log::warn("qa_judge model equals the extractor/QA model; the quality gate is "
                      "meant to use a separate evaluator");
        }
    }
};

inline ProviderRoleConfig role_from(const json& t, const std::string& role_env_name) {
    ProviderRoleConfig r;
    if (t.is_object()) {
        r.model = t.value("model", "");
        r.base_url = t.value("base_url", "");
        r.api_key = t.value("api_key", "");
        r.fixtures = t.value("fixtures", "");
    }
    auto env = providers::endpoint_from_env(role_env_name, r.model);
    if (r.base_url.empty()) r.base_url = env.base_url;
    if (r.api_key.empty()) r.api_key = env.api_key;
    return r;
}

inline PipelineConfig load_config(const fs::path& path) {
    json t;
    try {
        t = toml::parse_file(path);
    } catch (const Error& e) {
        throw ConfigInvalid(std::string("cannot read config: ") + e.what());
    }

    PipelineConfig c;
    const json& corpus = t.value("corpus", json::object());
    c.corpus_dir = corpus.value("dir", "");
    if (corpus.contains("domain")) {
        c.default_domain = domain_from_string(corpus["domain"].get<std::string>());
    }

    const json& chunking = t.value("chunking", json::object());
    c.chunk_budget = chunking.value("budget", 600);

    const json& kgt = t.value("kg", json::object());
    c.window_n = kgt.value("window", 3);
    c.window_stride = kgt.value("stride", 2);
    c.tau_rel = kgt.value("tau_rel", 0.85);

    const json& pat = t.value("patterns", json::object());
    c.edge_usage_cap = pat.value("edge_usage_cap", 5);
    c.max_chain_len = pat.value("max_chain_len", 3);

    const json& pert = t.value("perturb", json::object());
    c.perturb_seed = pert.value("seed", 42);
    c.tau_q = pert.value("tau_q", 0.85);
    c.tau_d = pert.value("tau_d", 0.85);
    c.lexicon_path = pert.value("lexicon", "");
    c.pivot_language = pert.value("pivot_language", "German");

    const json& split = t.value("split", json::object());
    c.split_seed = split.value("seed", 7);
    if (split.contains("test_quota")) {
        for (const auto& [k, v] : split["test_quota"].items()) {
            c.test_quota[k] = v.get<size_t>();
        }
    }

    const json& eval = t.value("eval", json::object());
    c.judge_mode = eval.value("judge_mode", "strict");
    c.match_threshold = eval.value("match_threshold", 0.9);
    c.retrieval_k = eval.value("k", 3);
    if (eval.contains("refusals")) {
        c.refusals = eval["refusals"].get<std::vector<std::string>>();
    }

    const json& out = t.value("output", json::object());
    c.output_dir = out.value("dir", "out");
    c.cache_dir = out.value("cache_dir", "");

    const json& prov = t.value("providers", json::object());
    c.max_in_flight = prov.value("max_in_flight", 8);
    c.extractor = role_from(prov.value("extractor", json::object()), "extractor");
    c.qa_judge = role_from(prov.value("qa_judge", json::object()), "qa_judge");
    c.perturber = role_from(prov.value("perturber", json::object()), "perturber");
    if (c.perturber.model.empty()) c.perturber = c.extractor;
    c.generator_endpoint = role_from(prov.value("generator", json::object()), "generator");
    if (prov.contains("generators")) {
        c.generators = prov["generators"].get<std::vector<std::string>>();
    }
    c.embedding_endpoint = role_from(prov.value("embedding", json::object()), "embedding");
    if (prov.contains("embedding_models")) {
        c.embedding_models = prov["embedding_models"].get<std::vector<std::string>>();
    }
    c.matcher_embedding_model = prov.value("matcher_embedding_model",
                                           c.embedding_models.empty() ? "" : c.embedding_models[0]);
    c.validate();
    return c;
}

} // namespace rare::config

#pragma once

#include <ctime>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rare/hash.hpp"
#include "rare/jsonl.hpp"
#include "rare/version.hpp"

namespace rare::manifest {

namespace fs = std::filesystem;

struct StageRecord {
    bool completed = false;
    std::map<std::string, std::string> input_digests;  // path -> sha256
    std::map<std::string, std::string> output_digests;

    json to_json() const {
        return json{{"completed", completed},
                    {"input_digests", input_digests},
                    {"output_digests", output_digests}};
    }
    static StageRecord from_json(const json& j) {
        StageRecord r;
        r.completed = j.value("completed", false);
        if (j.contains("input_digests")) {
            r.input_digests = j["input_digests"].get<std::map<std::string, std::string>>();
        }
        if (j.contains("output_digests")) {
            r.output_digests = j["output_digests"].get<std::map<std::string, std::string>>();
        }
        return r;
    }
};

struct RunManifest {
    std::string config_digest;
    std::string tool_version = kVersion;
    std::string generated_at; // informational only; excluded from comparisons
    std::map<std::string, StageRecord> stages;

    json to_json() const {
        json s = json::object();
        for (const auto& [name, rec] : stages) s[name] = rec.to_json();
        return json{{"config_digest", config_digest},
                    {"tool_version", tool_version},
                    {"generated_at", generated_at},
                    {"stages", s}};
    }

    static RunManifest from_json(const json& j) {
        RunManifest m;
        m.config_digest = j.value("config_digest", "");
        m.tool_version = j.value("tool_version", "");
        m.generated_at = j.value("generated_at", "");
        if (j.contains("stages")) {
            for (const auto& [name, rec] : j["stages"].items()) {
                m.stages[name] = StageRecord::from_json(rec);
            }
        }
        return m;
    }
};

inline std::string file_digest(const fs::path& path) {
    return hash::sha256_hex(jsonl::read_text(path));
}

inline RunManifest load_manifest(const fs::path& path) {
    if (!fs::exists(path)) return RunManifest{};
    return RunManifest::from_json(jsonl::read_json(path));
}

inline void save_manifest(const fs::path& path, RunManifest& m) {
    std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    m.generated_at = buf;
    jsonl::write_json(path, m.to_json());
}

/// A stage is skipped iff it completed with the same config digest, every
/// recorded input digest still matches, and every output still exists with
/// its recorded digest.
inline bool stage_up_to_date(const RunManifest& m, const std::string& stage,
                             const std::string& config_digest,
                             const std::vector<fs::path>& inputs,
                             const std::vector<fs::path>& outputs) {
    if (m.config_digest != config_digest) return false;
    auto it = m.stages.find(stage);
    if (it == m.stages.end() || !it->second.completed) return false;
    const auto& rec = it->second;

    if (rec.input_digests.size() != inputs.size()) return false;
    for (const auto& p : inputs) {
        auto d = rec.input_digests.find(p.string());
        if (d == rec.input_digests.end()) return false;
        if (!fs::exists(p) || file_digest(p) != d->second) return false;
    }
    for (const auto& p : outputs) {
        auto d = rec.output_digests.find(p.string());
        if (d == rec.output_digests.end()) return false;
        if (!fs::exists(p) || file_digest(p) != d->second) return false;
    }
    return true;
}

inline void record_stage(RunManifest& m, const std::string& stage, const std::string& config_digest,
                         const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs) {
    m.config_digest = config_digest;
    StageRecord rec;
    rec.completed = true;
    for (const auto& p : inputs) rec.input_digests[p.string()] = file_digest(p);
    for (const auto& p : outputs) rec.output_digests[p.string()] = file_digest(p);
    m.stages[stage] = std::move(rec);
}

} // namespace rare::manifest

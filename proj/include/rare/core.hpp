#pragma once

#include <json.hpp>
#include <map>
#include <optional>
#include <string>

#include "rare/errors.hpp"

namespace rare {

using json = nlohmann::json;

enum class Domain { finance, economics, policy, other };

inline std::string to_string(Domain d) {
    switch (d) {
        case Domain::finance: return "finance";
        case Domain::economics: return "economics";
        case Domain::policy: return "policy";
        case Domain::other: return "other";
    }
    return "other";
}

inline Domain domain_from_string(const std::string& s) {
    if (s == "finance") return Domain::finance;
    if (s == "economics") return Domain::economics;
    if (s == "policy") return Domain::policy;
    if (s == "other") return Domain::other;
    throw ConfigInvalid("unknown domain: " + s);
}

struct DocumentMeta {
    std::string title;
    int year = 0;
    std::optional<std::string> country;
    std::optional<std::string> company;
    std::string file_type;
    std::map<std::string, std::string> extra;

    json to_json() const {
        json j{{"title", title}, {"year", year}, {"file_type", file_type}};
        if (country) j["country"] = *country;
        if (company) j["company"] = *company;
        if (!extra.empty()) j["extra"] = extra;
        return j;
    }

    static DocumentMeta from_json(const json& j) {
        DocumentMeta m;
        m.title = j.value("title", "");
        m.year = j.value("year", 0);
        if (j.contains("country") && !j["country"].is_null()) m.country = j["country"].get<std::string>();
        if (j.contains("company") && !j["company"].is_null()) m.company = j["company"].get<std::string>();
        m.file_type = j.value("file_type", "");
        if (j.contains("extra")) m.extra = j["extra"].get<std::map<std::string, std::string>>();
        return m;
    }
};

struct SourceDocument {
    std::string doc_id;
    Domain domain = Domain::other;
    std::string body; // markdown; tables as pipe-table blocks
    DocumentMeta meta;
};

struct Chunk {
    std::string chunk_id; // <domain>_<doc_id>_chunk_<k>
    std::string doc_id;
    size_t ordinal = 0;
    std::string text;
    size_t token_count = 0;
    bool contains_table = false;

    json to_json() const {
        return json{{"chunk_id", chunk_id}, {"doc_id", doc_id},
                    {"ordinal", ordinal},   {"text", text},
                    {"token_count", token_count}, {"contains_table", contains_table}};
    }

    static Chunk from_json(const json& j) {
        Chunk c;
        c.chunk_id = j.at("chunk_id").get<std::string>();
        c.doc_id = j.at("doc_id").get<std::string>();
        c.ordinal = j.at("ordinal").get<size_t>();
        c.text = j.at("text").get<std::string>();
        c.token_count = j.at("token_count").get<size_t>();
        c.contains_table = j.at("contains_table").get<bool>();
        return c;
    }
};

inline std::string make_chunk_id(Domain domain, const std::string& doc_id, size_t ordinal) {
    return to_string(domain) + "_" + doc_id + "_chunk_" + std::to_string(ordinal);
}

} // namespace rare

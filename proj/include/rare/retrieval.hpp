#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "rare/core.hpp"
#include "rare/providers.hpp"
#include "rare/qagen.hpp"

namespace rare::retrieval {

struct VectorIndex {
    std::string model;
    std::vector<std::pair<std::string, std::vector<double>>> entries; // (chunk_id, embedding)
    size_t dimension = 0;
};

struct RetrievalSet {
    std::string qa_id;
    std::string model;
    std::vector<std::string> chunk_ids; // descending score
    std::vector<double> scores;
    bool answer_available = false;

    json to_json() const {
        return json{{"qa_id", qa_id},
                    {"model", model},
                    {"chunk_ids", chunk_ids},
                    {"scores", scores},
                    {"answer_available", answer_available}};
    }
    static RetrievalSet from_json(const json& j) {
        RetrievalSet r;
        r.qa_id = j.at("qa_id").get<std::string>();
        r.model = j.at("model").get<std::string>();
        r.chunk_ids = j.at("chunk_ids").get<std::vector<std::string>>();
        r.scores = j.at("scores").get<std::vector<double>>();
        r.answer_available = j.at("answer_available").get<bool>();
        return r;
    }
};

/// Embed every chunk once (cache-backed) into an exact-scan index.
inline VectorIndex build_index(const std::string& model, const std::vector<Chunk>& chunks,
                               providers::EmbedClient& embedder) {
    if (chunks.empty()) throw EmptyCorpus();
    VectorIndex idx;
    idx.model = model;
    idx.entries.reserve(chunks.size());
    for (const auto& c : chunks) {
        auto v = embedder.embed_single(model, c.text);
        idx.dimension = v.values.size();
        idx.entries.emplace_back(c.chunk_id, std::move(v.values));
    }
    return idx;
}

inline void save_index(const std::filesystem::path& path, const VectorIndex& idx) {
    std::vector<json> rows;
    rows.reserve(idx.entries.size());
    for (const auto& [id, vec] : idx.entries) {
        rows.push_back(json{{"chunk_id", id}, {"vector", vec}});
    }
    jsonl::write_all(path, rows);
}

inline VectorIndex load_index(const std::filesystem::path& path, const std::string& model) {
    VectorIndex idx;
    idx.model = model;
    for (const auto& row : jsonl::read_all(path)) {
        auto vec = row.at("vector").get<std::vector<double>>();
        idx.dimension = vec.size();
        idx.entries.emplace_back(row.at("chunk_id").get<std::string>(), std::move(vec));
    }
    return idx;
}

/// Exact top-k by cosine similarity; ties break toward the lexicographically
/// smaller chunk_id so rankings are reproducible.
inline RetrievalSet retrieve(const VectorIndex& index, const std::string& query_text,
                             providers::EmbedClient& embedder, size_t k = 3) {
    auto q = embedder.embed_single(index.model, query_text);
    std::vector<std::pair<double, const std::string*>> scored;
    scored.reserve(index.entries.size());
    for (const auto& [id, vec] : index.entries) {
        scored.emplace_back(providers::cosine(q.values, vec), &id);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return *a.second < *b.second;
    });
    RetrievalSet out;
    out.model = index.model;
    size_t n = std::min(k, scored.size());
    for (size_t i = 0; i < n; ++i) {
        out.chunk_ids.push_back(*scored[i].second);
        out.scores.push_back(scored[i].first);
    }
    return out;
}

/// Whether the retrieved context suffices to answer. Single-hop: any ground
/// truth chunk retrieved, or the literal answer present in the retrieved
/// texts. Multi-hop: ALL ground-truth chunks retrieved (a partial set cannot
/// complete the hops) unless the answer-string criterion fires.
inline bool decide_availability(const RetrievalSet& retr, const qagen::QAPair& qa,
                                const std::map<std::string, const Chunk*>& chunks_by_id) {
    bool multi = patterns::is_multi_hop(qa.kind);
    size_t gt_found = 0;
    for (const auto& gt : qa.gt_chunk_ids) {
        if (std::find(retr.chunk_ids.begin(), retr.chunk_ids.end(), gt) != retr.chunk_ids.end()) {
            ++gt_found;
        }
    }
    if (!multi && gt_found > 0) return true;
    if (multi && gt_found == qa.gt_chunk_ids.size()) return true;

    std::string joined;
    for (const auto& id : retr.chunk_ids) {
        auto it = chunks_by_id.find(id);
        if (it != chunks_by_id.end()) {
            joined += it->second->text;
            joined += "\n";
        }
    }
    return text::normalized_contains(joined, qa.answer);
}

inline void write_retrieval_sets(const std::filesystem::path& path, const std::vector<RetrievalSet>& sets) {
    std::vector<json> rows;
    rows.reserve(sets.size());
    for (const auto& s : sets) rows.push_back(s.to_json());
    jsonl::write_all(path, rows);
}

inline std::vector<RetrievalSet> read_retrieval_sets(const std::filesystem::path& path) {
    std::vector<RetrievalSet> out;
    for (const auto& row : jsonl::read_all(path)) out.push_back(RetrievalSet::from_json(row));
    return out;
}

} // namespace rare::retrieval

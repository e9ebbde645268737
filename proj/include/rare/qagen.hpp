#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rare/hash.hpp"
#include "rare/patterns.hpp"
#include "rare/prompts.hpp"
#include "rare/providers.hpp"
#include "rare/rng.hpp"

namespace rare::qagen {

using patterns::PatternInstance;
using patterns::PatternKind;

struct QAPair {
    std::string qa_id;
    std::string question;
    std::string answer;
    PatternKind kind = PatternKind::single_hop;
    std::vector<std::string> gt_chunk_ids; // ordered ground-truth chunks
    Domain domain = Domain::other;
    DocumentMeta meta;
    std::optional<std::string> pivot_entity;
    std::vector<kg::Triplet> triplets; // facts behind the pair; drives doc perturbation
    bool answer_in_gt = false;         // hard gate single-hop, recorded for multi-hop

    json to_json() const {
        json t = json::array();
        for (const auto& tr : triplets) t.push_back(tr.to_json());
        json j{{"qa_id", qa_id},
               {"question", question},
               {"answer", answer},
               {"kind", patterns::to_string(kind)},
               {"gt_chunk_ids", gt_chunk_ids},
               {"domain", rare::to_string(domain)},
               {"meta", meta.to_json()},
               {"triplets", t},
               {"answer_in_gt", answer_in_gt}};
        if (pivot_entity) j["pivot_entity"] = *pivot_entity;
        return j;
    }

    static QAPair from_json(const json& j) {
        QAPair p;
        p.qa_id = j.at("qa_id").get<std::string>();
        p.question = j.at("question").get<std::string>();
        p.answer = j.at("answer").get<std::string>();
        p.kind = patterns::pattern_kind_from_string(j.at("kind").get<std::string>());
        p.gt_chunk_ids = j.at("gt_chunk_ids").get<std::vector<std::string>>();
        p.domain = domain_from_string(j.at("domain").get<std::string>());
        p.meta = DocumentMeta::from_json(j.at("meta"));
        if (j.contains("pivot_entity")) p.pivot_entity = j["pivot_entity"].get<std::string>();
        for (const auto& t : j.value("triplets", json::array())) {
            p.triplets.push_back(kg::Triplet::from_json(t));
        }
        p.answer_in_gt = j.value("answer_in_gt", false);
        return p;
    }
};

struct QualityScores {
    std::optional<int> reasonableness; // multi-hop only
    int clarity = 0;
    int correctness = 0;

    json to_json() const {
        json j{{"clarity", clarity}, {"correctness", correctness}};
        if (reasonableness) j["reasonableness"] = *reasonableness;
        return j;
    }
};

struct BenchmarkSplit {
    std::vector<std::string> train;
    std::vector<std::string> test;

    json to_json() const { return json{{"train", train}, {"test", test}}; }
};

inline std::string make_qa_id(PatternKind kind, std::vector<std::string> gt_chunk_ids,
                              const std::string& question) {
    std::sort(gt_chunk_ids.begin(), gt_chunk_ids.end());
    json key = json::array({patterns::to_string(kind), gt_chunk_ids, question});
    return "qa_" + hash::sha256_hex(key.dump()).substr(0, 16);
}

namespace detail {

struct ParsedQA {
    std::string question;
    std::string answer;
};

inline std::optional<ParsedQA> parse_qa_response(const std::string& raw) {
    json parsed;
    try {
        parsed = providers::extract_json(raw);
    } catch (const NoJsonFound&) {
        log::warn("QA generation returned no JSON");
        return std::nullopt;
    }
    if (!parsed.is_object()) return std::nullopt;
    ParsedQA qa;
    qa.question = text::trim(parsed.value("question", ""));
    qa.answer = text::trim(parsed.value("answer", ""));
    if (qa.question.empty() || qa.answer.empty()) return std::nullopt; // vague-triplet rejection
    return qa;
}

} // namespace detail

/// Single-hop generation. The parsed answer must be findable (normalized
/// substring) in the ground-truth chunk, and must not restate itself in
/// the question; otherwise the instance yields nothing.
inline std::optional<QAPair> generate_single_hop(const PatternInstance& inst, const kg::Triplet& triplet,
                                                 const Chunk& chunk, const DocumentMeta& meta,
                                                 Domain domain, providers::ChatClient& chat,
                                                 const std::string& model) {
    json tj{{"entity_1", triplet.entity_1}, {"relation", triplet.relation}, {"entity_2", triplet.entity_2}};
    providers::ChatRequest req;
    req.model = model;
    req.system_prompt = prompts::single_hop_qa_system(domain);
    req.user_prompt = prompts::single_hop_qa_user(tj, chunk, meta);
    auto parsed = detail::parse_qa_response(chat.chat(req).text);
    if (!parsed) return std::nullopt;

    if (!text::normalized_contains(chunk.text, parsed->answer)) {
        log::debug("single-hop answer not in ground-truth chunk; dropped");
        return std::nullopt;
    }
    if (text::normalized_contains(parsed->question, parsed->answer)) {
        log::debug("answer literally appears in question; dropped");
        return std::nullopt;
    }

    QAPair p;
    p.kind = PatternKind::single_hop;
    p.question = parsed->question;
    p.answer = parsed->answer;
    p.gt_chunk_ids = {chunk.chunk_id};
    p.domain = domain;
    p.meta = meta;
    p.triplets = {triplet};
    p.answer_in_gt = true;
    p.qa_id = make_qa_id(p.kind, p.gt_chunk_ids, p.question);
    (void)inst;
    return p;
}

/// Multi-hop generation over a chained/star/inverted-star instance. Prompt-side
/// pivot-rarity and distractor checks surface as empty strings; the local
/// post-check rejects answers that leak into the question.
inline std::optional<QAPair> generate_multi_hop(const PatternInstance& inst,
                                                const std::vector<kg::Triplet>& triplets,
                                                const std::vector<Chunk>& chunks,
                                                const DocumentMeta& meta, Domain domain,
                                                providers::ChatClient& chat, const std::string& model) {
    json tj = json::array();
    for (const auto& t : triplets) {
        tj.push_back(json{{"entity_1", t.entity_1},
                          {"relation", t.relation},
                          {"entity_2", t.entity_2},
                          {"answer_chunk_id", t.answer_chunk_id}});
    }
    providers::ChatRequest req;
    req.model = model;
    req.system_prompt = prompts::multi_hop_qa_system();
    req.user_prompt = prompts::multi_hop_qa_user(patterns::to_string(inst.kind),
                                                 inst.pivot_entity.value_or(""), tj, chunks, meta);
    auto parsed = detail::parse_qa_response(chat.chat(req).text);
    if (!parsed) return std::nullopt;

    if (text::normalized_contains(parsed->question, parsed->answer)) {
        log::debug("multi-hop answer appears in question; dropped");
        return std::nullopt;
    }

    QAPair p;
    p.kind = inst.kind;
    p.question = parsed->question;
    p.answer = parsed->answer;
    p.gt_chunk_ids = inst.chunk_ids;
    p.domain = domain;
    p.meta = meta;
    p.pivot_entity = inst.pivot_entity;
    p.triplets = triplets;

    std::string all_gt;
    for (const auto& c : chunks) {
        all_gt += c.text;
        all_gt += "\n";
    }
    p.answer_in_gt = text::normalized_contains(all_gt, p.answer); // soft for multi-hop
    p.qa_id = make_qa_id(p.kind, p.gt_chunk_ids, p.question);
    return p;
}

/// LLM quality gate: accepted iff every applicable dimension is strictly
/// above `threshold`. Single-hop pairs are judged on clarity+correctness,
/// multi-hop on reasonableness+clarity+correctness. Malformed judge output
/// rejects the pair with no scores.
inline std::pair<bool, std::optional<QualityScores>>
quality_gate(const QAPair& pair, const std::vector<Chunk>& gt_chunks,
             providers::ChatClient& judge, const std::string& model, int threshold = 3) {
    bool multi = patterns::is_multi_hop(pair.kind);
    providers::ChatRequest req;
    req.model = model;
    req.system_prompt = multi ? prompts::multi_hop_judge_system() : prompts::single_hop_judge_system();
    req.user_prompt = prompts::judge_user(pair.question, pair.answer, gt_chunks);
    auto resp = judge.chat(req);

    auto read_dim = [](const json& scores, const char* name) -> std::optional<int> {
        if (!scores.contains(name)) return std::nullopt;
        const auto& v = scores[name];
        int val;
        if (v.is_number_integer()) {
            val = v.get<int>();
        } else if (v.is_number_float() && v.get<double>() == static_cast<int>(v.get<double>())) {
            val = static_cast<int>(v.get<double>());
        } else {
            return std::nullopt;
        }
        if (val < 1 || val > 5) return std::nullopt;
        return val;
    };

    try {
        json parsed = providers::extract_json(resp.text);
        const json& dims = parsed.contains("dimension_scores") ? parsed["dimension_scores"] : parsed;
        QualityScores s;
        auto clarity = read_dim(dims, "clarity");
        auto correctness = read_dim(dims, "correctness");
        if (!clarity || !correctness) throw MalformedResponse("judge omitted clarity/correctness");
        s.clarity = *clarity;
        s.correctness = *correctness;
        if (multi) {
            auto reasonableness = read_dim(dims, "reasonableness");
            if (!reasonableness) throw MalformedResponse("judge omitted reasonableness");
            s.reasonableness = *reasonableness;
        }
        bool accepted = s.clarity > threshold && s.correctness > threshold &&
                        (!multi || *s.reasonableness > threshold);
        return {accepted, s};
    } catch (const std::exception& e) {
        log::warn("malformed judge output for ", pair.qa_id, ": ", e.what());
        return {false, std::nullopt};
    }
}

/// Seeded uniform sample without replacement per (domain, kind) cell;
/// remainder goes to train. Cells are visited in sorted key order and ids
/// sorted before sampling, so the split depends only on the accepted set,
/// the quotas, and the seed.
inline BenchmarkSplit split_benchmark(const std::vector<QAPair>& accepted,
                                      const std::map<std::string, size_t>& test_quota_per_kind,
                                      uint64_t seed) {
    std::map<std::string, std::vector<std::string>> cells;
    for (const auto& p : accepted) {
        cells[rare::to_string(p.domain) + "/" + patterns::to_string(p.kind)].push_back(p.qa_id);
    }

    BenchmarkSplit split;
    for (auto& [cell_key, ids] : cells) {
        std::sort(ids.begin(), ids.end());
        std::string kind = cell_key.substr(cell_key.find('/') + 1);
        size_t quota = 0;
        if (auto it = test_quota_per_kind.find(kind); it != test_quota_per_kind.end()) {
            quota = it->second;
        }
        quota = std::min(quota, ids.size());

        rng::Rng rng(seed ^ hash::fnv1a64(cell_key));
        auto sampled = rng.sample(ids, quota);
        std::set<std::string> test_set(sampled.begin(), sampled.end());
        for (const auto& id : ids) {
            if (test_set.count(id)) {
                split.test.push_back(id);
            } else {
                split.train.push_back(id);
            }
        }
    }
    return split;
}

inline void write_qa(const std::filesystem::path& path, const std::vector<QAPair>& pairs) {
    std::vector<json> rows;
    rows.reserve(pairs.size());
    for (const auto& p : pairs) rows.push_back(p.to_json());
    jsonl::write_all(path, rows);
}

inline std::vector<QAPair> read_qa(const std::filesystem::path& path) {
    std::vector<QAPair> out;
    for (const auto& row : jsonl::read_all(path)) out.push_back(QAPair::from_json(row));
    return out;
}

} // namespace rare::qagen

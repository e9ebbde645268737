#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "rare/core.hpp"
#include "rare/jsonl.hpp"
#include "rare/log.hpp"
#include "rare/text.hpp"
#include "rare/tokenize.hpp"

namespace rare::ingest {

namespace fs = std::filesystem;

/// A paragraph or a whole table (with caption/note lines) — the atomic
/// segmentation unit. Units are never split across chunks.
struct Unit {
    std::string text;
    size_t token_count = 0;
    bool is_table = false;
};

inline bool is_table_row(const std::string& line) {
    std::string t = text::trim(line);
    return t.size() >= 2 && t.front() == '|';
}

namespace detail {

struct Block {
    std::vector<std::string> lines;
    bool has_table = false;
};

inline std::vector<Block> split_blocks(const std::string& body) {
    std::vector<Block> blocks;
    Block cur;
    int consecutive_rows = 0;
    for (auto& line : text::split_lines(body)) {
        if (text::trim(line).empty()) {
            if (!cur.lines.empty()) blocks.push_back(std::move(cur));
            cur = Block{};
            consecutive_rows = 0;
            continue;
        }
        if (is_table_row(line)) {
            if (++consecutive_rows >= 2) cur.has_table = true;
        } else {
            consecutive_rows = 0;
        }
        cur.lines.push_back(line);
    }
    if (!cur.lines.empty()) blocks.push_back(std::move(cur));
    return blocks;
}

/// A lone line that introduces a table: ends with a colon or carries a
/// Table/Figure label. Ordinary one-sentence paragraphs do not qualify.
inline bool looks_like_caption(const std::string& line) {
    std::string t = text::trim(line);
    if (t.empty() || t.find('\n') != std::string::npos) return false;
    if (t.back() == ':') return true;
    std::string lower = text::lower(t);
    return lower.rfind("table ", 0) == 0 || lower.rfind("figure ", 0) == 0;
}

} // namespace detail

/// Segment a document body into paragraph/table units.
///
/// Blocks are separated by blank lines. A block holding two or more
/// consecutive pipe-table rows is a table unit, and a caption line directly
/// above it is folded into the same unit so tables travel with their titles.
/// Explanation lines written right under the table (no blank line) are part
/// of the table block already; separate paragraphs around a table stay
/// separate units.
inline std::vector<Unit> segment_units(const SourceDocument& doc,
                                       const TokenCounter& count = default_token_counter()) {
    if (text::trim(doc.body).empty()) throw EmptyDocument(doc.doc_id);

    auto blocks = detail::split_blocks(doc.body);
    std::vector<Unit> units;
    for (size_t i = 0; i < blocks.size(); ++i) {
        std::string body_text = text::join(blocks[i].lines, "\n");
        if (blocks[i].has_table) {
            if (!units.empty() && !units.back().is_table &&
                detail::looks_like_caption(units.back().text)) {
                body_text = units.back().text + "\n" + body_text;
                units.pop_back();
            }
            units.push_back(Unit{body_text, count(body_text), true});
        } else {
            units.push_back(Unit{body_text, count(body_text), false});
        }
    }
    return units;
}

/// Greedy packing of units into ~budget-token chunks. A unit larger than the
/// budget becomes a singleton chunk rather than being split.
inline std::vector<Chunk> chunk_document(const SourceDocument& doc,
                                         size_t budget = 600,
                                         const TokenCounter& count = default_token_counter()) {
    auto units = segment_units(doc, count);

    std::vector<Chunk> chunks;
    std::vector<const Unit*> pending;
    size_t pending_tokens = 0;

    auto flush = [&] {
        if (pending.empty()) return;
        std::vector<std::string> parts;
        parts.reserve(pending.size());
        bool table = false;
        for (const Unit* u : pending) {
            parts.push_back(u->text);
            table = table || u->is_table;
        }
        Chunk c;
        c.ordinal = chunks.size();
        c.doc_id = doc.doc_id;
        c.chunk_id = make_chunk_id(doc.domain, doc.doc_id, c.ordinal);
        c.text = text::join(parts, "\n\n");
        c.token_count = count(c.text);
        c.contains_table = table;
        chunks.push_back(std::move(c));
        pending.clear();
        pending_tokens = 0;
    };

    for (const Unit& u : units) {
        if (!pending.empty() && pending_tokens + u.token_count > budget) flush();
        pending.push_back(&u);
        pending_tokens += u.token_count;
        if (u.token_count > budget) flush(); // oversized unit stays a singleton
    }
    flush();
    return chunks;
}

/// Joining chunk texts reproduces the body modulo whitespace.
inline bool round_trips(const SourceDocument& doc, const std::vector<Chunk>& chunks) {
    std::vector<std::string> texts;
    texts.reserve(chunks.size());
    for (const auto& c : chunks) texts.push_back(c.text);
    return text::collapse_ws(text::join(texts, "\n\n")) == text::collapse_ws(doc.body);
}

// ---------------------------------------------------------------------------
// Corpus loading: one .md/.txt per document plus <doc_id>.meta.json sidecar.
// ---------------------------------------------------------------------------

inline SourceDocument load_document(const fs::path& body_path, Domain default_domain) {
    SourceDocument doc;
    doc.doc_id = body_path.stem().string();
    doc.domain = default_domain;
    doc.body = jsonl::read_text(body_path);

    fs::path meta_path = body_path.parent_path() / (doc.doc_id + ".meta.json");
    if (fs::exists(meta_path)) {
        json j = jsonl::read_json(meta_path);
        doc.meta = DocumentMeta::from_json(j);
        if (j.contains("domain")) doc.domain = domain_from_string(j["domain"].get<std::string>());
        if (doc.meta.year < 0) throw Error("negative year in " + meta_path.string());
    } else {
        log::warn("no meta sidecar for ", doc.doc_id, "; using defaults");
    }
    return doc;
}

inline std::vector<SourceDocument> load_corpus(const fs::path& dir, Domain default_domain) {
    std::vector<SourceDocument> docs;
    if (!fs::is_directory(dir)) throw Error("corpus dir not found: " + dir.string());
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        auto ext = entry.path().extension().string();
        if (ext != ".md" && ext != ".txt") continue;
        docs.push_back(load_document(entry.path(), default_domain));
    }
    std::sort(docs.begin(), docs.end(),
              [](const SourceDocument& a, const SourceDocument& b) { return a.doc_id < b.doc_id; });
    return docs;
}

inline void write_chunks(const fs::path& path, const std::vector<Chunk>& chunks) {
    std::vector<json> rows;
    rows.reserve(chunks.size());
    for (const auto& c : chunks) rows.push_back(c.to_json());
    jsonl::write_all(path, rows);
}

inline std::vector<Chunk> read_chunks(const fs::path& path) {
    std::vector<Chunk> chunks;
    for (const auto& row : jsonl::read_all(path)) chunks.push_back(Chunk::from_json(row));
    return chunks;
}

} // namespace rare::ingest

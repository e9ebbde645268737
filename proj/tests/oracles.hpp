// Independent reference implementations used as test oracles. These must
// stay decoupled from the library code paths they check: brute force and
// direct definitions only.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace oracles {

inline size_t levenshtein(const std::string& a, const std::string& b) {
    std::vector<size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (size_t j = 1; j <= b.size(); ++j) {
            size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

/// Greedy unit packing by the definition: accumulate while the running sum
/// stays within budget; an oversized unit always stands alone.
inline std::vector<std::vector<size_t>> greedy_pack(const std::vector<size_t>& unit_tokens,
                                                    size_t budget) {
    std::vector<std::vector<size_t>> chunks;
    std::vector<size_t> cur;
    size_t cur_sum = 0;
    for (size_t i = 0; i < unit_tokens.size(); ++i) {
        if (!cur.empty() && cur_sum + unit_tokens[i] > budget) {
            chunks.push_back(cur);
            cur.clear();
            cur_sum = 0;
        }
        cur.push_back(i);
        cur_sum += unit_tokens[i];
        if (unit_tokens[i] > budget) {
            chunks.push_back(cur);
            cur.clear();
            cur_sum = 0;
        }
    }
    if (!cur.empty()) chunks.push_back(cur);
    return chunks;
}

struct Edge {
    std::string head;
    std::string tail;
    std::string chunk;
};

/// Single-hop filter straight from the degree definition, recounting
/// degrees by scanning the edge list.
inline std::vector<size_t> single_hop_filter(const std::vector<Edge>& edges) {
    std::map<std::string, size_t> ind, outd;
    for (const auto& e : edges) {
        ++outd[e.head];
        ++ind[e.tail];
    }
    auto get = [](std::map<std::string, size_t>& m, const std::string& k) {
        auto it = m.find(k);
        return it == m.end() ? size_t(0) : it->second;
    };
    std::vector<size_t> out;
    for (size_t i = 0; i < edges.size(); ++i) {
        if (get(outd, edges[i].head) == 1 && get(ind, edges[i].head) == 0 &&
            get(ind, edges[i].tail) == 1 && get(outd, edges[i].tail) == 0) {
            out.push_back(i);
        }
    }
    return out;
}

/// Exhaustive enumeration of simple tail-to-head paths of 2..max_len edges,
/// dropping paths whose edges all cite one chunk. Adjacency is rescanned on
/// every extension on purpose.
inline std::vector<std::vector<size_t>> all_chains(const std::vector<Edge>& edges, size_t max_len) {
    std::vector<std::vector<size_t>> out;
    std::vector<size_t> path;

    std::function<void()> extend = [&] {
        if (path.size() >= 2) {
            std::set<std::string> chunks;
            for (size_t i : path) chunks.insert(edges[i].chunk);
            if (chunks.size() >= 2) out.push_back(path);
        }
        if (path.size() >= max_len) return;
        const Edge& last = edges[path.back()];
        for (size_t next = 0; next < edges.size(); ++next) {
            if (edges[next].head != last.tail) continue;
            // simple path: the new tail must not revisit any node on the path
            std::set<std::string> nodes;
            nodes.insert(edges[path.front()].head);
            for (size_t i : path) nodes.insert(edges[i].tail);
            if (nodes.count(edges[next].tail)) continue;
            path.push_back(next);
            extend();
            path.pop_back();
        }
    };

    for (size_t i = 0; i < edges.size(); ++i) {
        if (edges[i].head == edges[i].tail) continue;
        path = {i};
        extend();
    }
    return out;
}

/// Full sort by (score desc, id asc); the first k entries are the answer.
inline std::vector<std::pair<double, std::string>>
brute_topk(const std::vector<std::pair<std::string, std::vector<double>>>& entries,
           const std::vector<double>& query, size_t k) {
    auto cosine = [](const std::vector<double>& a, const std::vector<double>& b) {
        double dot = 0, na = 0, nb = 0;
        for (size_t i = 0; i < a.size(); ++i) {
            dot += a[i] * b[i];
            na += a[i] * a[i];
            nb += b[i] * b[i];
        }
        if (na == 0 || nb == 0) return 0.0;
        return dot / (std::sqrt(na) * std::sqrt(nb));
    };
    std::vector<std::pair<double, std::string>> scored;
    for (const auto& [id, vec] : entries) scored.emplace_back(cosine(query, vec), id);
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    if (scored.size() > k) scored.resize(k);
    return scored;
}

/// Plain double-loop mean over a grid of f values.
inline double grid_mean(const std::vector<std::vector<int>>& grid) {
    double sum = 0;
    size_t n = 0;
    for (const auto& row : grid) {
        for (int f : row) {
            sum += f;
            ++n;
        }
    }
    return sum / static_cast<double>(n);
}

inline double flat_mean(const std::vector<int>& fs) {
    double sum = 0;
    for (int f : fs) sum += f;
    return sum / static_cast<double>(fs.size());
}

} // namespace oracles

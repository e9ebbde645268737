#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>
#include <unistd.h>
#include <vector>

#include "rare/errors.hpp"

namespace rare::jsonl {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path.string());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return data;
}

/// Write via temp file + rename so readers never observe partial content.
/// The temp name carries a process-wide counter: concurrent writers of the
/// same path each rename their own file, last one wins.
inline void write_text_atomic(const fs::path& path, const std::string& data) {
    static std::atomic<uint64_t> counter{0};
    fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter.fetch_add(1));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write file: " + tmp.string());
        out << data;
    }
    fs::rename(tmp, path);
}

inline std::vector<json> read_all(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open jsonl: " + path.string());
    std::vector<json> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw Error("bad json at " + path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

inline void write_all(const fs::path& path, const std::vector<json>& rows) {
    std::string buf;
    for (const auto& row : rows) {
        buf += row.dump();
        buf += '\n';
    }
    write_text_atomic(path, buf);
}

inline json read_json(const fs::path& path) {
    return json::parse(read_text(path));
}

inline void write_json(const fs::path& path, const json& value) {
    write_text_atomic(path, value.dump(2) + "\n");
}

} // namespace rare::jsonl

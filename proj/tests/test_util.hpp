#pragma once

#include <filesystem>
#include <string>

namespace testutil {

namespace fs = std::filesystem;

inline fs::path source_dir() { return fs::path(RARE_SOURCE_DIR); }

/// Fresh scratch directory, removed on destruction.
struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("rare_test_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

} // namespace testutil

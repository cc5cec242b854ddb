#pragma once

// Helpers shared by the pipeline tests and the acceptance binary.

#include "sufforge/oracle.hpp"
#include "sufforge/pipeline.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

namespace sufforge::testing {

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "t") {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("sufforge-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream(path, std::ios::binary) << text;
}

/// Concatenation of every part file, in partition order.
inline std::string read_parts(const std::filesystem::path& dir) {
    std::string all;
    for (const auto& p : part_files(dir))
        all += slurp(p);
    return all;
}

inline std::string oracle_text(std::span<const Read> reads, bool indexes_only = false) {
    std::ostringstream out;
    const auto sa = naive_sa(reads);
    write_sa_lines(out, sa, indexes_only);
    return out.str();
}

} // namespace sufforge::testing

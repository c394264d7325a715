#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

namespace brw {

struct ResourceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// 17 significant digits round-trips any double exactly.
inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

// Writes to a temp file in the same directory, then renames into place, so a
// reader never observes a partially written file.
inline void atomic_write_file(const std::filesystem::path& path,
                              const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    fs::create_directories(dir);
    fs::path tmp = dir / (path.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ResourceError("cannot open " + tmp.string() + " for writing");
        out << content;
        out.flush();
        if (!out) throw ResourceError("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

}  // namespace brw

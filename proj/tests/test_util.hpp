#ifndef POSCAP_TEST_UTIL_HPP
#define POSCAP_TEST_UTIL_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

namespace poscap_test {

// Scratch directory for one test binary, wiped on construction.
class TempDir {
public:
    explicit TempDir(const std::string& name) {
        path_ = std::filesystem::temp_directory_path() / ("poscap_" + name);
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }

    std::string file(const std::string& name) const { return (path_ / name).string(); }

    std::string write(const std::string& name, const std::string& content) const {
        std::string p = file(name);
        std::ofstream out(p, std::ios::binary);
        out << content;
        return p;
    }

private:
    std::filesystem::path path_;
};

} // namespace poscap_test

#endif

#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "rioflow/gtext.hpp"
#include "rioflow/ir.hpp"

namespace rioflow::test {

inline Endpoint ep(const std::string &s)
{
    const auto dot = s.find('.');
    if (dot == std::string::npos)
        return {"", s};
    return {s.substr(0, dot), s.substr(dot + 1)};
}

inline Wire wire(const std::string &src, std::vector<std::string> dsts)
{
    Wire w;
    w.src = ep(src);
    for (const auto &d : dsts)
        w.dsts.push_back(ep(d));
    return w;
}

inline Project parse_text(std::string_view text, bool validate = true)
{
    ParseOptions o;
    o.file = "test.gtext";
    o.validate = validate;
    return parse(text, o);
}

inline std::string demo_path(const std::string &name) { return std::string(RIOFLOW_DEMO_DIR) + "/" + name; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir()
    {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("rioflow-test-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir &) = delete;
    TempDir &operator=(const TempDir &) = delete;

    std::string str() const { return path_.string(); }
    std::string file(const std::string &name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

} // namespace rioflow::test

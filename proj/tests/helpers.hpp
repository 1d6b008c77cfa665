#pragma once

#include <perfluence/perfluence.hpp>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

namespace pft {

namespace pf = perfluence;

inline pf::OptionDef binary(std::string name) {
    return {std::move(name), pf::OptionKind::Binary, {}, 0.0};
}

inline pf::OptionDef numeric(std::string name, std::vector<double> domain, double default_value) {
    return {std::move(name), pf::OptionKind::Numeric, std::move(domain), default_value};
}

/// n binary options named o0..o<n-1>, optionally constrained.
inline pf::ConfigurationSpace binary_space(std::size_t n,
                                           const std::vector<std::string>& constraints = {}) {
    std::vector<pf::OptionDef> opts;
    for (std::size_t i = 0; i < n; ++i) opts.push_back(binary("o" + std::to_string(i)));
    return pf::ConfigurationSpace(std::move(opts), constraints);
}

/// Fresh scratch directory under the system temp root; removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string& tag) {
        auto base = std::filesystem::temp_directory_path();
        for (int i = 0;; ++i) {
            auto p = base / (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(i));
            if (std::filesystem::create_directory(p)) {
                path_ = p;
                break;
            }
        }
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

  private:
    std::filesystem::path path_;
};

}  // namespace pft

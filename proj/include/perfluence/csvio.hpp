#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include <zlib.h>

#include "perfluence/errors.hpp"

namespace perfluence {

inline bool has_gz_suffix(const std::string& path) {
    return path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
}

/// Reads a whole file into memory; `.gz` paths are decompressed transparently.
inline std::string read_file(const std::string& path) {
    if (has_gz_suffix(path)) {
        gzFile f = gzopen(path.c_str(), "rb");
        if (!f) throw DataError("cannot open '" + path + "'");
        std::string out;
        char buf[1 << 16];
        int n;
        while ((n = gzread(f, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(n));
        const bool bad = n < 0;
        gzclose(f);
        if (bad) throw FormatError("gzip read error in '" + path + "'");
        return out;
    }
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw DataError("cannot open '" + path + "'");
    std::string out;
    char buf[1 << 16];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) out.append(buf, n);
    std::fclose(f);
    return out;
}

/// Writes a file atomically enough for our purposes; `.gz` paths compress.
/// Gzip output carries no timestamp, so identical content is byte-identical.
inline void write_file(const std::string& path, std::string_view content) {
    if (has_gz_suffix(path)) {
        gzFile f = gzopen(path.c_str(), "wb");
        if (!f) throw DataError("cannot create '" + path + "'");
        if (!content.empty() &&
            gzwrite(f, content.data(), static_cast<unsigned>(content.size())) !=
                static_cast<int>(content.size())) {
            gzclose(f);
            throw DataError("gzip write error in '" + path + "'");
        }
        gzclose(f);
        return;
    }
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw DataError("cannot create '" + path + "'");
    if (!content.empty() && std::fwrite(content.data(), 1, content.size(), f) != content.size()) {
        std::fclose(f);
        throw DataError("write error in '" + path + "'");
    }
    std::fclose(f);
}

namespace detail {

/// Yields lines without trailing newline; handles both \n and \r\n.
class LineCursor {
public:
    explicit LineCursor(std::string_view text) : rest_(text) {}

    bool next(std::string_view& line) {
        if (rest_.empty()) return false;
        const auto pos = rest_.find('\n');
        if (pos == std::string_view::npos) {
            line = rest_;
            rest_ = {};
        } else {
            line = rest_.substr(0, pos);
            rest_ = rest_.substr(pos + 1);
        }
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no_;
        return true;
    }

    std::size_t line_no() const { return line_no_; }

private:
    std::string_view rest_;
    std::size_t line_no_ = 0;
};

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

template <typename Int>
Int parse_int_field(std::string_view s, const std::string& path, std::size_t line,
                    const char* what) {
    Int v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw FormatError(path + ":" + std::to_string(line) + ": bad " + what + " '" +
                          std::string(s) + "'");
    return v;
}

} // namespace detail
} // namespace perfluence

#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include "cvs/errors.hpp"

namespace cvs::detail {

// Streams a file line by line, invoking fn(line_number, line) for every
// non-empty line. Line numbers are 1-based. A trailing \r (CRLF input) is
// stripped before the callback sees the line.
inline void for_each_line(const std::filesystem::path& path,
                          const std::function<void(std::size_t, const std::string&)>& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open file: " + path.string());
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        fn(line_no, line);
    }
}

inline std::string trim_whitespace(const std::string& s) {
    const char* ws = " \t\n\r\f\v";
    auto begin = s.find_first_not_of(ws);
    if (begin == std::string::npos) {
        return {};
    }
    auto end = s.find_last_not_of(ws);
    return s.substr(begin, end - begin + 1);
}

}  // namespace cvs::detail

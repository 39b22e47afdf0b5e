#include <charconv>
#include <cmath>
#include <fstream>

#include "deeppp/error.hpp"
#include "deeppp/textio.hpp"

namespace deeppp {

bool is_blank_or_comment(std::string_view line) {
    auto pos = line.find_first_not_of(" \t\r");
    return pos == std::string_view::npos || line[pos] == '#';
}

std::vector<std::string> split_fields(std::string_view line) {
    std::vector<std::string> out;
    if (line.find('\t') != std::string_view::npos) {
        std::size_t start = 0;
        while (true) {
            auto tab = line.find('\t', start);
            out.emplace_back(line.substr(start, tab - start));
            if (tab == std::string_view::npos) break;
            start = tab + 1;
        }
        return out;
    }
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\r')) ++i;
        if (i >= line.size()) break;
        auto j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\r') ++j;
        out.emplace_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, p);
}

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void write_text_file(const std::string& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + path + "'");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

}  // namespace deeppp

#include "cnnrom/io/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cnnrom::io {

namespace {

std::string quote(const std::string& s)
{
    if (s.find_first_of(",\"\r\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (const char c : s) {
        out += c;
        if (c == '"') {
            out += '"';
        }
    }
    return out + "\"";
}

void write_row(std::ostringstream& os, const std::vector<std::string>& fields)
{
    for (std::size_t i = 0; i < fields.size(); ++i) {
        os << (i ? "," : "") << quote(fields[i]);
    }
    os << '\n';
}

}  // namespace

std::string format_cell(const Cell& c)
{
    if (const auto* s = std::get_if<std::string>(&c)) {
        return *s;
    }
    if (const auto* i = std::get_if<std::int64_t>(&c)) {
        return std::to_string(*i);
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", std::get<double>(c));
    return buf;
}

std::string to_csv(const Table& t)
{
    std::ostringstream os;
    write_row(os, t.header);
    for (const auto& row : t.rows) {
        if (row.size() != t.header.size()) {
            throw std::invalid_argument("emit_report: row has " + std::to_string(row.size()) + " cells, header has " +
                                        std::to_string(t.header.size()));
        }
        std::vector<std::string> fields;
        for (const Cell& c : row) {
            fields.push_back(format_cell(c));
        }
        write_row(os, fields);
    }
    return os.str();
}

void emit_report(const Table& t, const std::filesystem::path& path)
{
    const std::string text = to_csv(t);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    os << text;
    if (!os) {
        throw std::runtime_error("cannot write " + path.string());
    }
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text)
{
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        any = true;
        if (quoted) {
            if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
                ++i;
            }
            row.push_back(std::move(field));
            field.clear();
            rows.push_back(std::move(row));
            row.clear();
            any = false;
        } else {
            field += c;
        }
    }
    if (quoted) {
        throw std::invalid_argument("parse_csv: unterminated quoted field");
    }
    if (any) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_csv(ss.str());
}

}  // namespace cnnrom::io

#include "cnnrom/io/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace cnnrom::io {

using Json = nlohmann::json;

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return "";
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Drops a trailing comment outside string literals.
std::string strip_comment(const std::string& line)
{
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) {
            in_string = !in_string;
        } else if (line[i] == '#' && !in_string) {
            return line.substr(0, i);
        }
    }
    return line;
}

std::vector<std::string> split_key(const std::string& key, int line)
{
    std::vector<std::string> parts;
    std::stringstream ss(key);
    std::string part;
    while (std::getline(ss, part, '.')) {
        part = trim(part);
        if (part.empty()) {
            throw ConfigError("TOML line " + std::to_string(line) + ": empty key segment in '" + key + "'");
        }
        for (const char c : part) {
            if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') {
                throw ConfigError("TOML line " + std::to_string(line) + ": unsupported key '" + key + "'");
            }
        }
        parts.push_back(part);
    }
    if (parts.empty()) {
        throw ConfigError("TOML line " + std::to_string(line) + ": missing key");
    }
    return parts;
}

Json parse_scalar(const std::string& text, int line)
{
    if (text == "true") {
        return true;
    }
    if (text == "false") {
        return false;
    }
    if (text.size() >= 2 && text.front() == '"' && text.back() == '"') {
        // JSON string escapes are a superset of the basic TOML ones used here.
        try {
            return Json::parse(text);
        } catch (const Json::parse_error&) {
            throw ConfigError("TOML line " + std::to_string(line) + ": bad string " + text);
        }
    }
    std::string num;
    for (const char c : text) {
        if (c != '_') {
            num += c;
        }
    }
    try {
        std::size_t used = 0;
        if (num.find_first_of(".eE") == std::string::npos && num != "inf" && num != "nan") {
            const long long v = std::stoll(num, &used);
            if (used == num.size()) {
                return v;
            }
        } else {
            const double v = std::stod(num, &used);
            if (used == num.size()) {
                return v;
            }
        }
    } catch (const std::exception&) {
    }
    throw ConfigError("TOML line " + std::to_string(line) + ": unsupported value '" + text + "'");
}

Json parse_value(const std::string& text, int line)
{
    if (text.empty()) {
        throw ConfigError("TOML line " + std::to_string(line) + ": missing value");
    }
    if (text.front() != '[') {
        return parse_scalar(text, line);
    }
    if (text.back() != ']') {
        throw ConfigError("TOML line " + std::to_string(line) + ": arrays must close on the same line");
    }
    Json arr = Json::array();
    const std::string body = trim(text.substr(1, text.size() - 2));
    std::string item;
    bool in_string = false;
    for (std::size_t i = 0; i <= body.size(); ++i) {
        const bool end = i == body.size();
        if (!end && body[i] == '"') {
            in_string = !in_string;
        }
        if (end || (body[i] == ',' && !in_string)) {
            const std::string t = trim(item);
            if (!t.empty()) {
                arr.push_back(parse_scalar(t, line));
            } else if (!end) {
                throw ConfigError("TOML line " + std::to_string(line) + ": empty array element");
            }
            item.clear();
        } else {
            item += body[i];
        }
    }
    return arr;
}

void flatten(const Json& j, const std::string& prefix, Json& out)
{
    if (j.is_object() && (!j.empty() || prefix.empty())) {
        for (const auto& [k, v] : j.items()) {
            flatten(v, prefix.empty() ? k : prefix + "." + k, out);
        }
    } else {
        out[prefix] = j;
    }
}

bool same_kind(const Json& def, const Json& v)
{
    if (def.is_number_float()) {
        return v.is_number();
    }
    if (def.is_number_unsigned()) {
        return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
    }
    if (def.is_number_integer()) {
        return v.is_number_integer();
    }
    if (def.is_array()) {
        if (!v.is_array()) {
            return false;
        }
        // Element type follows the first default element when there is one.
        for (const Json& e : v) {
            if (!def.empty() && !same_kind(def.front(), e)) {
                return false;
            }
        }
        return true;
    }
    return def.type() == v.type();
}

}  // namespace

Json parse_toml(const std::string& text)
{
    Json root = Json::object();
    std::vector<std::string> table;
    std::istringstream is(text);
    std::string raw;
    int line = 0;
    while (std::getline(is, raw)) {
        ++line;
        const std::string s = trim(strip_comment(raw));
        if (s.empty()) {
            continue;
        }
        if (s.front() == '[') {
            if (s.size() < 3 || s.back() != ']' || s[1] == '[') {
                throw ConfigError("TOML line " + std::to_string(line) + ": unsupported table header " + s);
            }
            table = split_key(s.substr(1, s.size() - 2), line);
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("TOML line " + std::to_string(line) + ": expected key = value");
        }
        std::vector<std::string> path = table;
        for (std::string& p : split_key(s.substr(0, eq), line)) {
            path.push_back(std::move(p));
        }
        Json::json_pointer ptr;
        for (const std::string& p : path) {
            ptr /= p;
        }
        if (root.contains(ptr)) {
            throw ConfigError("TOML line " + std::to_string(line) + ": duplicate key");
        }
        root[ptr] = parse_value(trim(s.substr(eq + 1)), line);
    }
    return root;
}

RunConfig::RunConfig(const Json& defaults)
{
    flat_ = Json::object();
    flatten(defaults, "", flat_);
}

void RunConfig::assign(const std::string& key, const Json& value, const std::string& origin)
{
    const auto it = flat_.find(key);
    if (it == flat_.end()) {
        throw ConfigError(origin + ": unknown key '" + key + "'");
    }
    if (!same_kind(*it, value)) {
        throw ConfigError(origin + ": key '" + key + "' expects a value like " + it->dump() + ", got " +
                          value.dump());
    }
    if (it->is_number_float()) {
        *it = value.get<double>();
    } else if (it->is_number_unsigned()) {
        *it = value.get<std::uint64_t>();
    } else {
        *it = value;
    }
}

void RunConfig::merge(const Json& doc, const std::string& origin)
{
    if (!doc.is_object()) {
        throw ConfigError(origin + ": top level must be a table/object");
    }
    Json flat = Json::object();
    flatten(doc, "", flat);
    for (const auto& [k, v] : flat.items()) {
        assign(k, v, origin);
    }
}

void RunConfig::merge_file(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is) {
        throw ConfigError("cannot read config " + path.string());
    }
    std::stringstream ss;
    ss << is.rdbuf();
    const std::string ext = path.extension().string();
    if (ext == ".toml") {
        try {
            merge(parse_toml(ss.str()), path.string());
        } catch (const ConfigError& e) {
            throw ConfigError(path.string() + ": " + e.what());
        }
    } else if (ext == ".json") {
        Json doc;
        try {
            doc = Json::parse(ss.str());
        } catch (const Json::parse_error& e) {
            throw ConfigError(path.string() + ": " + e.what());
        }
        merge(doc, path.string());
    } else {
        throw ConfigError(path.string() + ": config files must end in .json or .toml");
    }
}

void RunConfig::set(const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("--set expects key=value, got '" + assignment + "'");
    }
    const std::string key = trim(assignment.substr(0, eq));
    const std::string text = trim(assignment.substr(eq + 1));
    Json value;
    try {
        value = Json::parse(text);
    } catch (const Json::parse_error&) {
        value = text;
    }
    assign(key, value, "--set");
}

const Json& RunConfig::at(const std::string& key) const
{
    const auto it = flat_.find(key);
    if (it == flat_.end()) {
        throw ConfigError("no config key '" + key + "'");
    }
    return *it;
}

Json RunConfig::section(const std::string& prefix) const
{
    Json out = Json::object();
    const std::string p = prefix + ".";
    for (const auto& [k, v] : flat_.items()) {
        if (k.rfind(p, 0) == 0) {
            Json::json_pointer ptr;
            std::stringstream ss(k.substr(p.size()));
            std::string part;
            while (std::getline(ss, part, '.')) {
                ptr /= part;
            }
            out[ptr] = v;
        }
    }
    return out;
}

Json RunConfig::resolved() const
{
    Json out = Json::object();
    for (const auto& [k, v] : flat_.items()) {
        Json::json_pointer ptr;
        std::stringstream ss(k);
        std::string part;
        while (std::getline(ss, part, '.')) {
            ptr /= part;
        }
        out[ptr] = v;
    }
    return out;
}

void RunConfig::write(const std::filesystem::path& path) const
{
    std::ofstream os(path, std::ios::trunc);
    os << resolved().dump(2) << '\n';
    if (!os) {
        throw std::runtime_error("cannot write " + path.string());
    }
}

}  // namespace cnnrom::io

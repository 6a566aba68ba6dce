#include "sspred/kvfile.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include "sspred/errors.hpp"

namespace sspred {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& text, const std::string& what) {
    const std::string t = trim(text);
    T v{};
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size()) {
        throw ValidationError("invalid value for " + what + ": '" + text + "'");
    }
    return v;
}

}  // namespace

KeyValues read_kv(std::istream& in, const std::string& source) {
    KeyValues kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ValidationError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
        }
        std::string key = trim(t.substr(0, eq));
        if (key.empty()) throw ValidationError(source + ":" + std::to_string(line_no) + ": empty key");
        if (!kv.emplace(key, trim(t.substr(eq + 1))).second) {
            throw ValidationError(source + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
        }
    }
    return kv;
}

KeyValues read_kv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    return read_kv(in, path.string());
}

void write_kv(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& entries) {
    for (const auto& [k, v] : entries) out << k << " = " << v << '\n';
}

std::string exact_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

double parse_double(const std::string& text, const std::string& what) { return parse_number<double>(text, what); }

long long parse_int(const std::string& text, const std::string& what) { return parse_number<long long>(text, what); }

unsigned long long parse_u64(const std::string& text, const std::string& what) {
    return parse_number<unsigned long long>(text, what);
}

std::vector<double> parse_double_list(const std::string& text, const std::string& what) {
    std::vector<double> out;
    if (trim(text).empty()) return out;
    std::size_t pos = 0;
    while (true) {
        const auto comma = text.find(',', pos);
        out.push_back(parse_double(text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos), what));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::string join_doubles(const double* data, std::size_t n) {
    std::string s;
    for (std::size_t k = 0; k < n; ++k) {
        if (k) s += ',';
        s += exact_double(data[k]);
    }
    return s;
}

const std::string& require(const KeyValues& kv, const std::string& key, const std::string& source) {
    auto it = kv.find(key);
    if (it == kv.end()) throw ValidationError(source + ": missing key '" + key + "'");
    return it->second;
}

}  // namespace sspred

#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace sspred {

/// Flat `key = value` text. Blank lines and lines starting with '#' are
/// ignored; duplicate keys and lines without '=' are errors (with line numbers).
using KeyValues = std::map<std::string, std::string>;

KeyValues read_kv(std::istream& in, const std::string& source = "input");
KeyValues read_kv(const std::filesystem::path& path);

/// Writes `key = value` lines in the given order.
void write_kv(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& entries);

/// Shortest decimal text that parses back to the identical double.
std::string exact_double(double v);
double parse_double(const std::string& text, const std::string& what);
long long parse_int(const std::string& text, const std::string& what);
unsigned long long parse_u64(const std::string& text, const std::string& what);
std::vector<double> parse_double_list(const std::string& text, const std::string& what);
std::string join_doubles(const double* data, std::size_t n);

/// Required lookup; throws ValidationError naming the missing key.
const std::string& require(const KeyValues& kv, const std::string& key, const std::string& source);

}  // namespace sspred

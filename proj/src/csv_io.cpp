#include "sspred/csv_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "sspred/errors.hpp"

namespace sspred {

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        auto comma = line.find(',', pos);
        out.push_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

double parse_double(std::string_view text, std::size_t line_no, const char* what) {
    text = trim(text);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        throw ValidationError("line " + std::to_string(line_no) + ": malformed " + what + " '" +
                              std::string(text) + "'");
    }
    return v;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + path.string());
    return out;
}

}  // namespace

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    if (std::string_view(buf) == "-0.000000") return "0.000000";
    return buf;
}

std::vector<Profile> read_profiles_csv(std::istream& in, SpeedBand band) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw ValidationError("empty profile file");
    ++line_no;
    if (trim(line) != "month,depth_m,speed_mps") {
        throw ValidationError("line 1: expected header 'month,depth_m,speed_mps'");
    }

    std::vector<Profile> profiles;
    std::vector<Sample> pending;
    Month current{};
    std::size_t group_line = 0;
    auto flush = [&] {
        if (pending.empty()) return;
        for (const Profile& p : profiles) {
            if (p.month() == current) {
                throw ChronologyError("line " + std::to_string(group_line) + ": duplicate month " + current.str());
            }
        }
        try {
            profiles.emplace_back(current, std::move(pending), band);
        } catch (const ValidationError& e) {
            throw ValidationError("line " + std::to_string(group_line) + ": " + e.what());
        }
        pending.clear();
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_commas(line);
        if (fields.size() != 3) {
            throw ValidationError("line " + std::to_string(line_no) + ": expected 3 fields, got " +
                                  std::to_string(fields.size()));
        }
        Month m{};
        try {
            m = Month::parse(trim(fields[0]));
        } catch (const ValidationError& e) {
            throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
        }
        const double depth = parse_double(fields[1], line_no, "depth");
        const double speed = parse_double(fields[2], line_no, "speed");
        if (pending.empty() || m != current) {
            flush();
            current = m;
            group_line = line_no;
        }
        if (!pending.empty() && !(depth > pending.back().depth_m)) {
            throw ValidationError("line " + std::to_string(line_no) + ": depth not ascending within month " +
                                  m.str());
        }
        pending.push_back({depth, speed});
    }
    flush();
    if (profiles.empty()) throw ValidationError("profile file has a header but no rows");
    for (std::size_t i = 1; i < profiles.size(); ++i) {
        if (profiles[i].month() < profiles[i - 1].month()) {
            throw ChronologyError("months out of order: " + profiles[i - 1].month().str() + " before " +
                                  profiles[i].month().str());
        }
    }
    return profiles;
}

std::vector<Profile> read_profiles_csv(const std::filesystem::path& path, SpeedBand band) {
    auto in = open_in(path);
    return read_profiles_csv(in, band);
}

void write_profiles_csv(std::ostream& out, const std::vector<Profile>& profiles) {
    out << "month,depth_m,speed_mps\n";
    for (const Profile& p : profiles) {
        const std::string m = p.month().str();
        for (const Sample& s : p.samples()) out << m << ',' << fmt6(s.depth_m) << ',' << fmt6(s.speed_mps) << '\n';
    }
}

void write_profiles_csv(const std::filesystem::path& path, const std::vector<Profile>& profiles) {
    auto out = open_out(path);
    write_profiles_csv(out, profiles);
}

LayeredVector read_layered_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line) || trim(line) != "layer_index,depth_m,speed_mps") {
        throw ValidationError("line 1: expected header 'layer_index,depth_m,speed_mps'");
    }
    LayeredVector out;
    std::vector<double> speeds;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_commas(line);
        if (fields.size() != 3) {
            throw ValidationError("line " + std::to_string(line_no) + ": expected 3 fields");
        }
        const double idx = parse_double(fields[0], line_no, "layer index");
        if (idx != static_cast<double>(speeds.size())) {
            throw ValidationError("line " + std::to_string(line_no) + ": layer index out of sequence");
        }
        out.depths.push_back(parse_double(fields[1], line_no, "depth"));
        speeds.push_back(parse_double(fields[2], line_no, "speed"));
    }
    out.speeds = Eigen::Map<Eigen::VectorXd>(speeds.data(), static_cast<Eigen::Index>(speeds.size()));
    return out;
}

LayeredVector read_layered_csv(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_layered_csv(in);
}

void write_layered_csv(std::ostream& out, const Eigen::VectorXd& layered, const DepthSchedule& sched) {
    if (static_cast<std::size_t>(layered.size()) != sched.size()) {
        throw DimensionError("layered vector length does not match schedule");
    }
    out << "layer_index,depth_m,speed_mps\n";
    for (std::size_t j = 0; j < sched.size(); ++j) {
        out << j << ',' << fmt6(sched[j]) << ',' << fmt6(layered[static_cast<Eigen::Index>(j)]) << '\n';
    }
}

void write_layered_csv(const std::filesystem::path& path, const Eigen::VectorXd& layered,
                       const DepthSchedule& sched) {
    auto out = open_out(path);
    write_layered_csv(out, layered, sched);
}

}  // namespace sspred

#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "sspred/ssp_core.hpp"

namespace sspred {

/// Profile CSV: header `month,depth_m,speed_mps`, month as YYYY-MM, rows
/// grouped by month with depth ascending. Values are written with 6 decimals.
/// Malformed rows throw ValidationError naming the line number.
std::vector<Profile> read_profiles_csv(std::istream& in, SpeedBand band = {});
std::vector<Profile> read_profiles_csv(const std::filesystem::path& path, SpeedBand band = {});
void write_profiles_csv(std::ostream& out, const std::vector<Profile>& profiles);
void write_profiles_csv(const std::filesystem::path& path, const std::vector<Profile>& profiles);

/// Layered vector CSV: header `layer_index,depth_m,speed_mps`.
struct LayeredVector {
    std::vector<double> depths;
    Eigen::VectorXd speeds;
};
LayeredVector read_layered_csv(std::istream& in);
LayeredVector read_layered_csv(const std::filesystem::path& path);
void write_layered_csv(std::ostream& out, const Eigen::VectorXd& layered, const DepthSchedule& sched);
void write_layered_csv(const std::filesystem::path& path, const Eigen::VectorXd& layered,
                       const DepthSchedule& sched);

/// Fixed 6-decimal formatting shared by every CSV writer.
std::string fmt6(double v);

}  // namespace sspred

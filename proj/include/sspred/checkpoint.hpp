#pragma once

#include <filesystem>
#include <iosfwd>

#include "sspred/hlstm.hpp"

namespace sspred {

/// Bank checkpoint directory layout:
///   manifest.txt        schedule, window, hyperparameters, seeds, per-layer final losses
///   layer_000.model ... one file per depth layer (weights, norm range, training row)
/// Both are flat `key = value` files. Doubles use shortest round-trip text,
/// so save -> load -> save reproduces identical bytes.
void save_bank(const std::filesystem::path& dir, const ModelBank& bank);
ModelBank load_bank(const std::filesystem::path& dir);

std::string layer_file_name(std::size_t layer);

void write_layer_model(std::ostream& out, const LayerModel& model, double depth_m,
                       const Eigen::RowVectorXd& training_row);

struct LoadedLayer {
    LayerModel model;
    double depth_m = 0.0;
    Eigen::RowVectorXd training_row;
};
LoadedLayer read_layer_model(std::istream& in, const std::string& source = "layer model");

}  // namespace sspred
